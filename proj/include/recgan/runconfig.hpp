#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recgan/codec.hpp"
#include "recgan/events.hpp"
#include "recgan/gan.hpp"
#include "recgan/synth.hpp"

namespace recgan {

// Flat dotted-key configuration for the pipeline. Every key round-trips
// through the file format losslessly; flags override file values.
struct RunConfig {
  std::string events_path = "events.csv";
  std::string catalog_path = "catalog.csv";
  std::string workdir = ".";

  Scheme scheme = Scheme::ViewBuy;
  BinEdges bin_edges = kDefaultBinEdges;

  CodecConfig codec;
  GanConfig gan;
  SynthConfig synth;

  std::uint64_t sample_realizations = 2500;
  std::vector<std::uint32_t> sample_segments;  // empty = every model segment
  double subsample_fraction = 0.08;
  double binarize_threshold = 0.0;
  std::uint64_t null_trials_count = 500;

  std::uint64_t seed_sample = 2;
  std::uint64_t seed_subsample = 3;
  std::uint64_t seed_null = 4;

  unsigned workers = 0;  // 0 = hardware concurrency
  bool deterministic = false;

  void validate() const;
};

// `key = value` lines, '#' comments. Unknown keys are validation errors.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);
// Canonical serialization: parse(write(cfg)) == cfg, key-sorted.
std::string write_config(const RunConfig& cfg);

// Applies one `key=value` override (CLI flag form).
void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value);

bool config_equal(const RunConfig& a, const RunConfig& b);

}  // namespace recgan
