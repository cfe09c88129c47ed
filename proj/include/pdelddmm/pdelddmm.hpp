#pragma once

#include "config.hpp"
#include "derivative_check.hpp"
#include "diffop.hpp"
#include "field_io.hpp"
#include "geodesic.hpp"
#include "grid.hpp"
#include "interpolate.hpp"
#include "keyvalue.hpp"
#include "optim.hpp"
#include "random_fields.hpp"
#include "registration.hpp"
#include "rk4.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "synth.hpp"
#include "transport.hpp"
