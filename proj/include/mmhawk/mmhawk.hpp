// SPDX-License-Identifier: Apache-2.0
//
// Copyright (C) 2026 The mmhawk Authors
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

#include "config.hpp"
#include "dataset_io.hpp"
#include "echo_sim.hpp"
#include "errors.hpp"
#include "frame_io.hpp"
#include "identifier.hpp"
#include "lstm.hpp"
#include "metrics.hpp"
#include "model_io.hpp"
#include "pipeline.hpp"
#include "pmm.hpp"
#include "rd_processing.hpp"
#include "scenario.hpp"
#include "seed.hpp"
#include "tracker.hpp"
