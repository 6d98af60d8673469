#pragma once

// Umbrella header for the elastic registration toolkit.

#include "elreg/affine.hpp"
#include "elreg/errors.hpp"
#include "elreg/eval.hpp"
#include "elreg/field.hpp"
#include "elreg/image.hpp"
#include "elreg/image_io.hpp"
#include "elreg/interpolate.hpp"
#include "elreg/normal_equations.hpp"
#include "elreg/pyramid.hpp"
#include "elreg/register_global.hpp"
#include "elreg/register_local.hpp"
#include "elreg/standardize.hpp"
#include "elreg/synth.hpp"
#include "elreg/warp.hpp"
