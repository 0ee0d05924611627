//
// Copyright 2026 The dpsda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include "dpsda/bounds.hpp"
#include "dpsda/dataset_io.hpp"
#include "dpsda/engines.hpp"
#include "dpsda/error.hpp"
#include "dpsda/experiment.hpp"
#include "dpsda/graph_model.hpp"
#include "dpsda/loss.hpp"
#include "dpsda/privacy_mech.hpp"
#include "dpsda/projection.hpp"
#include "dpsda/regret.hpp"
#include "dpsda/rng.hpp"
#include "dpsda/streams.hpp"
