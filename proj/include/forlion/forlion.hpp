#ifndef FORLION_FORLION_HPP
#define FORLION_FORLION_HPP

#include "forlion/cubature.hpp"
#include "forlion/design.hpp"
#include "forlion/engine.hpp"
#include "forlion/expectation.hpp"
#include "forlion/factor.hpp"
#include "forlion/formula.hpp"
#include "forlion/liftone.hpp"
#include "forlion/linalg.hpp"
#include "forlion/link.hpp"
#include "forlion/model.hpp"
#include "forlion/rounding.hpp"
#include "forlion/types.hpp"

#endif
