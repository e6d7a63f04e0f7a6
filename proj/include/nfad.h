/* Copyright 2026 the nfad authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C API for the nfad toolkit: synthetic slide-rail sound generation,
 * log-mel feature extraction, conditioned normalizing-flow / VAE training,
 * anomaly scoring and evaluation reports.
 *
 * All functions are driven by JSON configuration documents; see the README
 * for the schema. A session owns the last error message and the artifact
 * list of the last successful run.
 */

#ifndef NFAD_H
#define NFAD_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define NFAD_API __declspec(dllexport)
#else
#define NFAD_API __attribute__((visibility("default")))
#endif

/* Opaque session handle. Not thread-safe; use one session per thread. */
typedef struct nfad_session nfad_session;

typedef enum nfad_status {
  NFAD_OK = 0,
  NFAD_INVALID = 1, /* bad config, parameters or input data */
  NFAD_FAILURE = 2  /* runtime failure (I/O, numerical) */
} nfad_status;

NFAD_API nfad_session *nfad_session_new(void);
NFAD_API void nfad_session_free(nfad_session *session);

NFAD_API const char *nfad_version(void);

/* Runs one pipeline command: "synth", "featurize", "train", "score",
 * "eval", "velocity" or "report". config_json is a complete configuration
 * document for that command. Returns a status code; on NFAD_OK the produced
 * files are available from nfad_artifacts_json(). */
NFAD_API int nfad_run(nfad_session *session, const char *command,
                      const char *config_json);

/* Message for the last failed nfad_run on this session, or "" if none.
 * The pointer stays valid until the next call on the session. */
NFAD_API const char *nfad_last_error(const nfad_session *session);

/* JSON document {"artifacts": [paths...]} from the last successful run. */
NFAD_API const char *nfad_artifacts_json(const nfad_session *session);

/* Built-in configuration documents: name is "desk" or "paper". Returns the
 * JSON text, or NULL for an unknown preset. The pointer stays valid until
 * the next call on the session. */
NFAD_API const char *nfad_preset_json(nfad_session *session, const char *name);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* NFAD_H */
