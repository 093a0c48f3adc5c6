#pragma once

#include "binary_io.hpp"
#include "chains.hpp"
#include "corpus.hpp"
#include "encoder.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "ffn.hpp"
#include "index.hpp"
#include "linker.hpp"
#include "pipeline.hpp"
#include "prf.hpp"
#include "random.hpp"
#include "ranked_list.hpp"
#include "remote_encoder.hpp"
#include "reranker.hpp"
#include "synth.hpp"
#include "text.hpp"
