#pragma once

// Umbrella header: the whole library in one include.

#include "shoenfield/graph_export.hpp"
#include "shoenfield/machine.hpp"
#include "shoenfield/parser.hpp"
#include "shoenfield/prob.hpp"
#include "shoenfield/random.hpp"
#include "shoenfield/rational.hpp"
#include "shoenfield/testkit.hpp"
#include "shoenfield/tree.hpp"
