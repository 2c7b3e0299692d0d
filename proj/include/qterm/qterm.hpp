// Copyright 2026 The qterm Authors
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

#pragma once

#include "qterm/divergence.hpp"
#include "qterm/errors.hpp"
#include "qterm/model.hpp"
#include "qterm/numerics.hpp"
#include "qterm/program.hpp"
#include "qterm/reachability.hpp"
#include "qterm/termination.hpp"
#include "qterm/universal.hpp"
