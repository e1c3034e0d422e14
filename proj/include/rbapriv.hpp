// Copyright 2026 The rbapriv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include "rbapriv/attack_sim.hpp"
#include "rbapriv/codec.hpp"
#include "rbapriv/data_io.hpp"
#include "rbapriv/dataset_gen.hpp"
#include "rbapriv/errors.hpp"
#include "rbapriv/evaluation.hpp"
#include "rbapriv/features.hpp"
#include "rbapriv/history_store.hpp"
#include "rbapriv/ipv4.hpp"
#include "rbapriv/random.hpp"
#include "rbapriv/risk_model.hpp"
