#pragma once

// Everything except the HTTP service and the CLI, which pull in vendored
// third-party headers; include those separately.

#include "factweaver/compose.hpp"
#include "factweaver/document.hpp"
#include "factweaver/errors.hpp"
#include "factweaver/fact.hpp"
#include "factweaver/generator.hpp"
#include "factweaver/logic.hpp"
#include "factweaver/narrate.hpp"
#include "factweaver/scoring.hpp"
#include "factweaver/search.hpp"
#include "factweaver/stats.hpp"
#include "factweaver/story.hpp"
#include "factweaver/table.hpp"
#include "factweaver/util.hpp"
#include "factweaver/visualize.hpp"
