#pragma once

// Umbrella header for the physec toolkit.

#include "physec/attacker.hpp"
#include "physec/auth.hpp"
#include "physec/bitvec.hpp"
#include "physec/channel.hpp"
#include "physec/csv.hpp"
#include "physec/errors.hpp"
#include "physec/harness.hpp"
#include "physec/plugtrust.hpp"
#include "physec/rng.hpp"
#include "physec/secure_channel.hpp"
#include "physec/skg.hpp"
#include "physec/stats.hpp"
#include "physec/version.hpp"
