#pragma once

#include "core.hpp"
#include "operator.hpp"
#include "polynomial.hpp"
#include "algebra.hpp"
#include "hamiltonian.hpp"
#include "special.hpp"
#include "spectra.hpp"
#include "dynamics.hpp"
#include "perturbation.hpp"
