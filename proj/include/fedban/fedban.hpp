#pragma once

#include "fedban/centralized.hpp"
#include "fedban/decentralized.hpp"
#include "fedban/environment.hpp"
#include "fedban/errors.hpp"
#include "fedban/harness.hpp"
#include "fedban/matrix.hpp"
#include "fedban/network.hpp"
#include "fedban/privatizer.hpp"
#include "fedban/record.hpp"
#include "fedban/rng.hpp"
