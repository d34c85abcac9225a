#pragma once

#include "error.hpp"
#include "symmfunc.hpp"
#include "sphere.hpp"
#include "ambient.hpp"
#include "pde.hpp"
#include "continuation.hpp"
#include "verify.hpp"
#include "geometry.hpp"
#include "properties.hpp"
#include "json_io.hpp"
#include "config.hpp"
