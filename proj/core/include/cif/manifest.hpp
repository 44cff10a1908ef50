#ifndef CIF_MANIFEST_HPP
#define CIF_MANIFEST_HPP

#include <string>

#include "cif/types.hpp"

namespace cif {

// Manifest files are JSON:
// {
//   "class": "<class name>",
//   "samples": [
//     {"id": "...", "split": "train|test", "label": "normal|anomalous",
//      "features": {"rgb": "<path>", "3d": "<path>"},
//      "depth": "<path>",        // optional
//      "gt_mask": "<path>"}      // optional
//   ]
// }
// Paths are relative to the manifest's directory. Unknown keys are rejected.

DatasetManifest read_manifest(const std::string& path);
void write_manifest(const DatasetManifest& manifest, const std::string& path);

/// Directory all manifest-relative paths resolve against.
std::string manifest_base_dir(const std::string& manifest_path);

}  // namespace cif

#endif
