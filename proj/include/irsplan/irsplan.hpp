// SPDX-License-Identifier: Apache-2.0
//
// irsplan: environment-aware IRS deployment planning for joint sensing and communication coverage
// Copyright (C) 2026 The irsplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "irsplan/common.hpp"
#include "irsplan/scene.hpp"
#include "irsplan/ckm.hpp"
#include "irsplan/channel.hpp"
#include "irsplan/metrics.hpp"
#include "irsplan/solvers/embed.hpp"
#include "irsplan/solvers/convex_qp.hpp"
#include "irsplan/solvers/sdp.hpp"
#include "irsplan/rounding.hpp"
#include "irsplan/sca.hpp"
#include "irsplan/heuristics.hpp"
#include "irsplan/planner.hpp"
