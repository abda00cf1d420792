/* stylenet - expressive velocity rendering for piano MIDI.
 *
 * C API over the core library: opaque handles, integer status codes, and a
 * per-thread error message. Handles are not thread-safe individually, but
 * independent handles may be used from different threads.
 */
#ifndef STYLENET_H
#define STYLENET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sn_status {
  SN_OK = 0,
  SN_ERROR = 1,            /* runtime or numeric failure */
  SN_INVALID_ARGUMENT = 2, /* unusable input: bad flag value, unknown genre, ... */
  SN_IO_ERROR = 3,
  SN_PARSE_ERROR = 4 /* malformed MIDI / manifest / checkpoint */
} sn_status;

/* Message for the most recent failing call on this thread. */
const char* sn_last_error(void);

/* ---------------------------------------------------------------- MIDI -- */

typedef struct sn_midi sn_midi;

sn_status sn_midi_open(const char* path, sn_midi** out);
sn_status sn_midi_from_bytes(const uint8_t* data, size_t size, sn_midi** out);
void sn_midi_close(sn_midi* midi);

int sn_midi_format(const sn_midi* midi);
int sn_midi_division(const sn_midi* midi);
int sn_midi_is_4_4(const sn_midi* midi);
size_t sn_midi_note_count(const sn_midi* midi);
size_t sn_midi_distinct_velocities(const sn_midi* midi);
/* Comma-separated list of time signatures in order of appearance, e.g.
 * "4/4"; empty string when the file has none. Returns the length written. */
size_t sn_midi_time_signatures(const sn_midi* midi, char* buf, size_t cap);

sn_status sn_midi_write(const sn_midi* midi, const char* path);
/* Writes "<prefix>_roll.csv" (note states) and "<prefix>_velocity.csv"
 * (normalized velocities), one row per sixteenth-note step. */
sn_status sn_midi_dump_csv(const sn_midi* midi, const char* prefix);

/* -------------------------------------------------------------- corpus -- */

typedef struct sn_genre_summary {
  char genre[32];
  size_t accepted;
  size_t rejected;
  size_t train;
  size_t validation;
} sn_genre_summary;

/* Scans one directory per genre, filters files (format 0, 4/4 time, at
 * least `threshold` distinct velocities), splits accepted files into
 * train/validation and writes the manifest JSON. `summaries` may be null;
 * otherwise up to `summary_cap` per-genre rows are written and the count
 * stored in *summary_count. */
sn_status sn_curate(const char* const* genre_names, const char* const* genre_dirs,
                    size_t genre_count, size_t threshold, double split_ratio, uint64_t seed,
                    const char* manifest_path, sn_genre_summary* summaries, size_t summary_cap,
                    size_t* summary_count);

/* ------------------------------------------------------------ training -- */

typedef struct sn_train_config {
  double learning_rate;   /* default 1e-3 */
  double keep_prob;       /* dropout keep probability, default 0.8 */
  double clip_norm;       /* gradient norm ceiling, default 10 */
  size_t window;          /* truncated-backprop window, default 200 steps */
  size_t epochs;          /* default 160 */
  size_t batch_size;      /* windows per optimizer step, default 4 */
  size_t genre_hidden;    /* branch hidden units per direction, default 128 */
  size_t interp_hidden;   /* shared-layer hidden units per direction, default 88 */
  uint64_t seed;          /* default 0 */
  size_t checkpoint_interval; /* epochs between checkpoint writes, default 10 */
  double stop_train_loss; /* stop once every genre is below; 0 disables */
  int masked_loss;        /* supervise onset cells only; default 0 */
} sn_train_config;

void sn_train_config_default(sn_train_config* config);

typedef void (*sn_progress_fn)(size_t epoch, const char* genre, double train_loss,
                               double val_loss, void* user);

/* Trains from the manifest, writing checkpoints to checkpoint_path and
 * appending per-epoch rows to loss_csv_path (epoch,genre,train_loss,
 * val_loss). resume_path may be null. Identical inputs produce
 * byte-identical checkpoints and CSV rows. */
sn_status sn_train(const char* manifest_path, const sn_train_config* config,
                   const char* checkpoint_path, const char* loss_csv_path,
                   const char* resume_path, sn_progress_fn progress, void* user);

/* --------------------------------------------------------------- model -- */

typedef struct sn_model sn_model;

sn_status sn_model_open(const char* checkpoint_path, sn_model** out);
void sn_model_close(sn_model* model);

size_t sn_model_genre_count(const sn_model* model);
/* Returns the i-th genre label, or null when out of range. The pointer is
 * owned by the model handle. */
const char* sn_model_genre_name(const sn_model* model, size_t index);
size_t sn_model_epoch(const sn_model* model);
sn_status sn_model_config(const sn_model* model, sn_train_config* out);

/* Predicts velocities for the score and writes the performed file. Note
 * timings, pitches and all non-note events are preserved. */
sn_status sn_render(const sn_model* model, const char* in_midi_path, const char* genre,
                    const char* out_midi_path);

/* ----------------------------------------------------------- gradcheck -- */

/* Runs the finite-difference suite (linear, LSTM, BiLSTM, dropout-off, MSE,
 * composed desk-scale model) on `num_seeds` random instances. *pass is set
 * to 1 when every component's max relative error is under tolerance. The
 * textual report is written to `report` (truncated to cap). */
sn_status sn_gradcheck(uint64_t seed, double tolerance, size_t num_seeds, int* pass,
                       char* report, size_t report_cap);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* STYLENET_H */
