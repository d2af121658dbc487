/*
 Copyright 2026 The ifir-design Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#pragma once

#include "ifir/errors.hpp"
#include "ifir/expm.hpp"
#include "ifir/lti.hpp"
#include "ifir/controller.hpp"
#include "ifir/loop.hpp"
#include "ifir/vrft.hpp"
#include "ifir/problem.hpp"
#include "ifir/solver.hpp"
#include "ifir/oracle.hpp"
#include "ifir/passivity.hpp"
#include "ifir/plants.hpp"
#include "ifir/design.hpp"
#include "ifir/io.hpp"
