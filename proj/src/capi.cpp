// Copyright 2026 the nfad authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nfad.h"

#include <string>

#include "run/pipeline.hpp"

using nlohmann::json;

struct nfad_session {
  std::string last_error;
  std::string artifacts = "{\"artifacts\":[]}";
  std::string preset;
};

extern "C" {

NFAD_API nfad_session *nfad_session_new(void) {
  try {
    return new nfad_session();
  } catch (...) {
    return nullptr;
  }
}

NFAD_API void nfad_session_free(nfad_session *session) { delete session; }

NFAD_API const char *nfad_version(void) { return "1.0.0"; }

NFAD_API int nfad_run(nfad_session *session, const char *command,
                      const char *config_json) {
  if (!session) return NFAD_INVALID;
  session->last_error.clear();
  if (!command || !config_json) {
    session->last_error = "command and config_json must be non-null";
    return NFAD_INVALID;
  }
  try {
    json cfg = json::parse(config_json);
    nfad::Artifacts made = nfad::run_command(command, cfg);
    session->artifacts = made.to_json().dump();
    return NFAD_OK;
  } catch (const json::parse_error &e) {
    session->last_error = std::string("config is not valid JSON: ") + e.what();
    return NFAD_INVALID;
  } catch (const std::exception &e) {
    session->last_error = e.what();
    return nfad::is_validation_error(e) ? NFAD_INVALID : NFAD_FAILURE;
  } catch (...) {
    session->last_error = "unknown error";
    return NFAD_FAILURE;
  }
}

NFAD_API const char *nfad_last_error(const nfad_session *session) {
  return session ? session->last_error.c_str() : "null session";
}

NFAD_API const char *nfad_artifacts_json(const nfad_session *session) {
  return session ? session->artifacts.c_str() : "{\"artifacts\":[]}";
}

NFAD_API const char *nfad_preset_json(nfad_session *session, const char *name) {
  if (!session || !name) return nullptr;
  try {
    session->preset = nfad::preset_config(name).dump(2);
    return session->preset.c_str();
  } catch (const std::exception &e) {
    session->last_error = e.what();
    return nullptr;
  }
}

}  // extern "C"
