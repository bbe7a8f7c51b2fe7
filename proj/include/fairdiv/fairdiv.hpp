#pragma once

#include "fairdiv/agents.hpp"
#include "fairdiv/classify.hpp"
#include "fairdiv/corpus.hpp"
#include "fairdiv/engine.hpp"
#include "fairdiv/harness.hpp"
#include "fairdiv/io.hpp"
#include "fairdiv/model.hpp"
#include "fairdiv/parse.hpp"
#include "fairdiv/prompts.hpp"
#include "fairdiv/provider.hpp"
#include "fairdiv/rational.hpp"
#include "fairdiv/stats.hpp"
