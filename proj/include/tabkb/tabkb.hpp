// Umbrella header.
#pragma once

#include "tabkb/common.hpp"
#include "tabkb/corpus.hpp"
#include "tabkb/discover.hpp"
#include "tabkb/eval.hpp"
#include "tabkb/headmatch.hpp"
#include "tabkb/kb.hpp"
#include "tabkb/learn.hpp"
#include "tabkb/link.hpp"
#include "tabkb/pipeline.hpp"
#include "tabkb/resolve.hpp"
#include "tabkb/retrieve.hpp"
#include "tabkb/sim.hpp"
#include "tabkb/text.hpp"
