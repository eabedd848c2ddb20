/**
 * This code is part of qkdrate.
 *
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.
 */

#ifndef QKDRATE_QKDRATE_HPP_
#define QKDRATE_QKDRATE_HPP_

#include "qkdrate/channels.hpp"
#include "qkdrate/clifford_attack.hpp"
#include "qkdrate/entropy.hpp"
#include "qkdrate/matrix.hpp"
#include "qkdrate/protocol.hpp"
#include "qkdrate/qudit.hpp"
#include "qkdrate/solver.hpp"
#include "qkdrate/tableau.hpp"

#endif  // QKDRATE_QKDRATE_HPP_
