#pragma once
// Umbrella header for the subgraph-retrieval KBQA library.

#include "srkbqa/encoder.hpp"
#include "srkbqa/eval.hpp"
#include "srkbqa/io.hpp"
#include "srkbqa/kb.hpp"
#include "srkbqa/parallel.hpp"
#include "srkbqa/reasoner.hpp"
#include "srkbqa/retriever.hpp"
#include "srkbqa/rng.hpp"
#include "srkbqa/serialize.hpp"
#include "srkbqa/subgraph.hpp"
#include "srkbqa/supervision.hpp"
#include "srkbqa/synth.hpp"
#include "srkbqa/tokenizer.hpp"
#include "srkbqa/training.hpp"
#include "srkbqa/types.hpp"
#include "srkbqa/vecmath.hpp"
