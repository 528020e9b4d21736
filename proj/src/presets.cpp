#include "revsmc/experiments.hpp"

namespace revsmc {

namespace {

constexpr const char* kAtmOverflow = R"(# ATM hitting probabilities across terminal on-counts, reverse-time SMC
experiment = atm
seed = 20260101
particles = 8000
replicates = 100

[atm]
sources = 20
barrier = 10
lambda = 0.5
mu = 10.0
alpha0 = 1.0
alpha1 = 3.0
)";

constexpr const char* kAtmOverflowDeep = R"(# Deeper ATM barrier (b = 30); long run, reverse-time SMC only
experiment = atm-large
seed = 20260102
particles = 10000
replicates = 100

[atm]
sources = 20
barrier = 30
lambda = 0.5
mu = 10.0
alpha0 = 1.0
alpha1 = 3.0
)";

constexpr const char* kStripContainment = R"(# Hyperbolic diffusion containment in the narrowing strip
experiment = hyperbolic
seed = 20260103
particles = 1000
replicates = 100

[hyperbolic]
l0 = -1
u0 = 1
lt = 5
ut = 5.1
t = 2
delta = 0.01
)";

constexpr const char* kStripSweep = R"(# Long-horizon containment sweep over terminal intervals (t = 10); the
# ladder below is a representative choice and is freely overridable.
experiment = hyperbolic-sweep
seed = 20260105
particles = 1000
replicates = 100

[hyperbolic]
l0 = -1
u0 = 1
lt = 5
ut = 5.1
t = 10
delta = 0.01
sweep = 2:2.1; 3:3.1; 4:4.1; 5:5.1; 6:6.1
)";

constexpr const char* kSisGrid10 = R"(# SIS source inference on the 10x10 grid
experiment = sis
seed = 20260104
particles = 30000
replicates = 100

[sis]
rows = 10
cols = 10
alpha = 1.0
beta = 12.0
gamma = 1.0
epsilon = 1e-4
M = 10
)";

constexpr const char* kSisGrid20 = R"(# SIS source inference on the 20x20 grid
experiment = sis
seed = 20260104
particles = 30000
replicates = 100

[sis]
rows = 20
cols = 20
alpha = 1.0
beta = 12.0
gamma = 1.0
epsilon = 1e-4
M = 10
)";

constexpr const char* kSisGrid30 = R"(# SIS source inference on the 30x30 grid (epsilon scaled so |V| eps ~ 1e-2)
experiment = sis
seed = 20260104
particles = 30000
replicates = 100

[sis]
rows = 30
cols = 30
alpha = 1.0
beta = 12.0
gamma = 1.0
epsilon = 1e-5
M = 10
)";

constexpr const char* kSisGrid100 = R"(# SIS source inference on the 100x100 grid (epsilon scaled so |V| eps ~ 1e-2)
experiment = sis
seed = 20260104
particles = 30000
replicates = 100

[sis]
rows = 100
cols = 100
alpha = 1.0
beta = 12.0
gamma = 1.0
epsilon = 1e-6
M = 10
)";

constexpr const char* kSisSurface = R"(# One representative SIS likelihood surface on the 10x10 grid
experiment = sis-surface
seed = 20260106
particles = 30000
replicates = 1

[sis]
rows = 10
cols = 10
alpha = 1.0
beta = 12.0
gamma = 1.0
epsilon = 1e-4
M = 10
)";

constexpr const char* kAtmSplitting = R"(# Adaptive multilevel splitting baseline for the ATM barrier event
experiment = atm-splitting
seed = 20260107
particles = 10000
replicates = 100

[atm]
sources = 20
barrier = 10
lambda = 0.5
mu = 10.0
alpha0 = 1.0
alpha1 = 3.0

[splitting]
kill_count = 1
mcmc_steps = 1
)";

constexpr const char* kHyperbolicSplitting = R"(# Adaptive multilevel splitting baseline for the containment event
# (100 particles per initial condition, 1000 initial conditions)
experiment = hyperbolic-splitting
seed = 20260108
particles = 100
replicates = 100

[hyperbolic]
l0 = -1
u0 = 1
lt = 5
ut = 5.1
t = 2
delta = 0.01

[splitting]
particles = 100
kill_count = 1
mcmc_steps = 1
initial_conditions = 1000
)";

constexpr Preset kPresets[] = {
    {"atm-overflow", "ATM K=20 b=10, reverse SMC, N=8000, 100 replicates", kAtmOverflow},
    {"atm-overflow-deep", "ATM K=20 b=30, reverse SMC, N=10000, 100 replicates", kAtmOverflowDeep},
    {"strip-containment", "strip (-1,1)->(5,5.1), t=2, N=1000, 100 replicates",
     kStripContainment},
    {"strip-sweep", "t=10 terminal-interval sweep, N=1000, 100 replicates",
     kStripSweep},
    {"sis-grid-10x10", "SIS 10x10, N=30000, 100 replicates", kSisGrid10},
    {"sis-grid-20x20", "SIS 20x20, N=30000, 100 replicates", kSisGrid20},
    {"sis-grid-30x30", "SIS 30x30, N=30000, 100 replicates", kSisGrid30},
    {"sis-grid-100x100", "SIS 100x100, N=30000, 100 replicates", kSisGrid100},
    {"sis-surface", "one SIS likelihood surface on the 10x10 grid", kSisSurface},
    {"atm-splitting", "splitting baseline, ATM K=20 b=10, N=10000", kAtmSplitting},
    {"strip-splitting", "splitting baseline for the strip containment",
     kHyperbolicSplitting},
};

}  // namespace

std::span<const Preset> presets() { return kPresets; }

const Preset* find_preset(std::string_view name) {
  for (const Preset& p : kPresets)
    if (name == p.name) return &p;
  return nullptr;
}

}  // namespace revsmc
