#pragma once

// Umbrella header.

#include "squidqct/circuit.hpp"
#include "squidqct/config.hpp"
#include "squidqct/error.hpp"
#include "squidqct/fock.hpp"
#include "squidqct/lindblad.hpp"
#include "squidqct/lyapunov.hpp"
#include "squidqct/observables.hpp"
#include "squidqct/oracles.hpp"
#include "squidqct/qsd.hpp"
#include "squidqct/sweep.hpp"
#include "squidqct/version.hpp"
