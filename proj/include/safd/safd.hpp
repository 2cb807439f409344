#pragma once

#include "safd/dimension.hpp"
#include "safd/disintegration.hpp"
#include "safd/errors.hpp"
#include "safd/experiments.hpp"
#include "safd/measure.hpp"
#include "safd/model.hpp"
#include "safd/report.hpp"
#include "safd/sampling.hpp"
#include "safd/scalar.hpp"
#include "safd/separation.hpp"
