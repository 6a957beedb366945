/*
 * Copyright 2026 The AQA Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "aqa/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string_view>

namespace aqa {

namespace {

spdlog::level::level_enum level_from_env() {
  const char* env = std::getenv("AQA_LOG");
  const std::string_view value = env ? env : "info";
  if (value == "error") return spdlog::level::err;
  if (value == "debug") return spdlog::level::debug;
  return spdlog::level::info;
}

}  // namespace

spdlog::logger& logger() {
  static const std::shared_ptr<spdlog::logger> instance = [] {
    auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
    auto log = std::make_shared<spdlog::logger>("aqa", std::move(sink));
    log->set_pattern("[%l] %v");
    log->set_level(level_from_env());
    return log;
  }();
  return *instance;
}

}  // namespace aqa
