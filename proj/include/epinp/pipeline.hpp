#pragma once

#include <string>

#include "epinp/chain_output.hpp"
#include "epinp/config.hpp"
#include "epinp/events.hpp"

namespace epinp {

// Reads a removals CSV (header "time", one removal per row); the population
// size and tie tolerance come from the config.
RemovalData ingest_removals(const std::string& path, const RunConfig& config,
                            TimeScale scale);

// Executes one pipeline command (simulate | fit-parametric | fit-discrete-gp
// | fit-cts-gp | ml-estimate | summarize) and writes its artifacts under
// out_dir.  Partial outputs are removed when the run fails.
void run_pipeline(const std::string& command, const RunConfig& config,
                  const std::string& out_dir);

// Helpers shared with tests.
void write_samples_csv(const std::string& path, const ChainOutput& chain);
void write_params_csv(const std::string& path, const ChainOutput& chain);
void write_summary_csv(const std::string& path, const PosteriorSummary& s);
ChainOutput read_samples_csv(const std::string& path);

}  // namespace epinp
