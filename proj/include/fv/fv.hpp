#pragma once

#include "fv/rational.hpp"
#include "fv/syntax.hpp"
#include "fv/structures.hpp"
#include "fv/boolean_ideals.hpp"
#include "fv/reduced_products.hpp"
#include "fv/fv_translator.hpp"
#include "fv/harness.hpp"
#include "fv/io.hpp"
