#ifndef CAUSTICA_CAUSTICA_HPP
#define CAUSTICA_CAUSTICA_HPP

// Multivalued geometrical optics via Hamiltonian ray tracing and Wigner
// measures: symbol catalog, bicharacteristic flows, branch reconstruction,
// caustic detection, fluid-form residual checks, and a finite-eps spectral
// oracle.

#include "caustica/branches.hpp"
#include "caustica/expr.hpp"
#include "caustica/flow.hpp"
#include "caustica/fluid.hpp"
#include "caustica/symbols.hpp"
#include "caustica/validate.hpp"
#include "caustica/wigner.hpp"

#endif
