// Copyright 2026 The fogslice Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "fogslice/agent.hpp"
#include "fogslice/belief.hpp"
#include "fogslice/config.hpp"
#include "fogslice/engine.hpp"
#include "fogslice/env.hpp"
#include "fogslice/game/core.hpp"
#include "fogslice/game/energy_split.hpp"
#include "fogslice/game/instance_io.hpp"
#include "fogslice/game/offload.hpp"
#include "fogslice/game/oracle.hpp"
#include "fogslice/game/slice.hpp"
#include "fogslice/game/welfare.hpp"
#include "fogslice/model.hpp"
#include "fogslice/queueing.hpp"
#include "fogslice/report.hpp"
#include "fogslice/topology.hpp"
#include "fogslice/types.hpp"
