// Umbrella header.
#pragma once

#include "normgraph/common.hpp"
#include "normgraph/embeddings.hpp"
#include "normgraph/evaluation.hpp"
#include "normgraph/graph.hpp"
#include "normgraph/index_io.hpp"
#include "normgraph/manifest.hpp"
#include "normgraph/parser.hpp"
#include "normgraph/qa.hpp"
#include "normgraph/retrieval.hpp"
#include "normgraph/section_code.hpp"
#include "normgraph/sparse.hpp"
#include "normgraph/tokenizer.hpp"
