#ifndef PFSGLD_MANIFEST_HPP_
#define PFSGLD_MANIFEST_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pfsgld {

// FNV-1a over file contents, hex encoded.
std::string file_content_hash(const std::string& path);

// JSON sidecar tying every output file to the exact command, config, seed
// and input hashes that produced it. Contains wall-clock metadata, so it is
// the one output that is not byte-stable across re-runs.
void write_manifest(const std::string& path, const std::string& command,
                    const std::map<std::string, std::string>& config,
                    std::uint64_t seed,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs,
                    double duration_seconds);

}  // namespace pfsgld

#endif  // PFSGLD_MANIFEST_HPP_
