#pragma once

// Umbrella header: congruity-regularized recommendation toolkit.
//
// Pipeline: load rating / trust / helpfulness CSVs (ingest), densify and
// filter, reconstruct pairwise congruity from helpfulness votes (congruity),
// analyze it (stats), train latent-factor models whose user factors are pulled
// together along a closeness matrix (factorization), and compare methods over
// seeded multi-run experiments (experiment). synthetic provides
// planted-structure datasets for validation.

#include "congrec/congruity.hpp"
#include "congrec/core.hpp"
#include "congrec/csv.hpp"
#include "congrec/errors.hpp"
#include "congrec/experiment.hpp"
#include "congrec/factorization.hpp"
#include "congrec/ingest.hpp"
#include "congrec/rng.hpp"
#include "congrec/stats.hpp"
#include "congrec/synthetic.hpp"
