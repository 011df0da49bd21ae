#pragma once

// Umbrella header: the full GKDE continual-learning toolkit.

#include "gkde/analysis.hpp"
#include "gkde/class_pdf.hpp"
#include "gkde/finite_diff.hpp"
#include "gkde/kde.hpp"
#include "gkde/model_bank.hpp"
#include "gkde/model_bank_io.hpp"
#include "gkde/network.hpp"
#include "gkde/objective.hpp"
#include "gkde/optimizer.hpp"
#include "gkde/pdf_builder.hpp"
#include "gkde/rng.hpp"
#include "gkde/stream_eval.hpp"
#include "gkde/tape.hpp"
#include "gkde/tensor.hpp"
#include "gkde/trainer.hpp"
