#ifndef SOUNDLAB_SOUNDLAB_HPP
#define SOUNDLAB_SOUNDLAB_HPP

#include "soundlab/errors.hpp"
#include "soundlab/torus_grid.hpp"
#include "soundlab/pair_potential.hpp"
#include "soundlab/meanfield.hpp"
#include "soundlab/bogolyubov.hpp"
#include "soundlab/fock.hpp"
#include "soundlab/manybody.hpp"
#include "soundlab/first_quantized.hpp"
#include "soundlab/harness/analysis.hpp"
#include "soundlab/harness/config.hpp"
#include "soundlab/harness/table.hpp"
#include "soundlab/harness/experiments.hpp"

#endif  // SOUNDLAB_SOUNDLAB_HPP
