#pragma once

#include "sfo/config.hpp"

namespace sfo {

/// Ready-to-run example system: closed-form evaluators for speed, plus the
/// equivalent expression-based ConfigSpec for export and cross-checking.
struct ModelCatalogEntry {
  std::string name;
  std::string summary;
  std::function<SlowFastSystem()> build;
  std::function<ConfigSpec()> config;

  ManifoldChain chain() const { return build_chain(config()); }
};

const std::vector<ModelCatalogEntry>& catalog();
const ModelCatalogEntry* find_model(std::string_view name);

}  // namespace sfo
