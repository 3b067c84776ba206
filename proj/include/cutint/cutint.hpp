#pragma once

// Umbrella header.

#include "analysis.hpp"
#include "classify.hpp"
#include "core.hpp"
#include "cut_geometry.hpp"
#include "cut_rules.hpp"
#include "domain_quadrature.hpp"
#include "experiments.hpp"
#include "fem.hpp"
#include "io.hpp"
#include "lagrange.hpp"
#include "levelset.hpp"
#include "mesh.hpp"
#include "moment_fitting.hpp"
#include "quadrules.hpp"
#include "reference.hpp"
