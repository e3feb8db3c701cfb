// SPDX-License-Identifier: Apache-2.0
//
// Flat key=value configuration with [section] headers. Defaults follow the
// simulation setup; every override is reflected in the config hash embedded
// in output artifacts.

#ifndef LECLN_IO_CONFIG_HPP
#define LECLN_IO_CONFIG_HPP

#include <map>
#include <string>

#include "lecln/dataset.hpp"
#include "lecln/eval.hpp"
#include "lecln/nn/tensor.hpp"

namespace lecln::io {

struct RunConfig {
  DatasetConfig data;
  nn::TrainConfig train;
  ExperimentGrid grid;
  std::string out_dir = "out";
};

// Parses "[section]\nkey=value" lines into "section.key" -> value.
// '#' starts a comment; blank lines are ignored.
std::map<std::string, std::string> parse_config_file(const std::string& path);
std::map<std::string, std::string> parse_config_text(const std::string& text);

// Defaults plus overrides; throws std::invalid_argument on unknown keys or
// unparsable values.
RunConfig make_run_config(const std::map<std::string, std::string>& overrides = {});

// Canonical text form (fixed key order, full precision).
std::string serialize_config(const RunConfig& cfg);

// FNV-1a hash of the canonical form, as a hex string.
std::string config_hash(const RunConfig& cfg);

}  // namespace lecln::io

#endif  // LECLN_IO_CONFIG_HPP
