#pragma once

#include "glb/env.hpp"
#include "glb/errors.hpp"
#include "glb/estimators.hpp"
#include "glb/glm.hpp"
#include "glb/harness.hpp"
#include "glb/linalg.hpp"
#include "glb/policies.hpp"
#include "glb/verify.hpp"
#include "glb/version.hpp"
