#pragma once

#include "geoequiv/catalog.hpp"
#include "geoequiv/csv.hpp"
#include "geoequiv/errors.hpp"
#include "geoequiv/expr.hpp"
#include "geoequiv/flow.hpp"
#include "geoequiv/integrals.hpp"
#include "geoequiv/metric.hpp"
#include "geoequiv/pair_io.hpp"
#include "geoequiv/quantum.hpp"
#include "geoequiv/sphere.hpp"
#include "geoequiv/tensors.hpp"
