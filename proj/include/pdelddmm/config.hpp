#pragma once

// RegistrationConfig <-> key=value text. The same dialect is used for config
// files and for the config echo in run manifests, so a manifest can be fed
// back as --config.

#include <set>
#include <string>

#include "keyvalue.hpp"
#include "registration.hpp"

namespace pdelddmm {

/// Keys a manifest carries besides the config echo; ignored on input.
inline const std::set<std::string>& manifest_only_keys()
{
  static const std::set<std::string> keys{"tool",          "version", "command", "source",  "target",
                                          "source_sha256", "target_sha256", "rng", "status", "iterations",
                                          "metrics",       "negative_curvature_events", "seed"};
  return keys;
}

/// Overwrites the fields named in kv. Unknown keys are rejected.
inline void apply_config(RegistrationConfig& cfg, const KeyValues& kv)
{
  for (const auto& [key, value] : kv) {
    try {
      if (key == "alpha")
        cfg.alpha = parse_double(value);
      else if (key == "s")
        cfg.s = static_cast<int>(parse_integer(value));
      else if (key == "sigma")
        cfg.sigma = parse_double(value);
      else if (key == "nt")
        cfg.nt = static_cast<int>(parse_integer(value));
      else if (key == "variant")
        cfg.variant = parse_variant(value);
      else if (key == "max_outer" || key == "iters")
        cfg.optimizer.max_outer = static_cast<int>(parse_integer(value));
      else if (key == "max_pcg")
        cfg.optimizer.max_pcg = static_cast<int>(parse_integer(value));
      else if (key == "step")
        cfg.optimizer.step = parse_double(value);
      else if (key == "ls_max")
        cfg.optimizer.ls_max = static_cast<int>(parse_integer(value));
      else if (key == "grad_rtol")
        cfg.optimizer.grad_rtol = parse_double(value);
      else if (key == "presmooth_sigma")
        cfg.presmooth_sigma = parse_double(value);
      else if (key == "transport")
        cfg.transport.scheme = parse_transport_scheme(value);
      else if (!manifest_only_keys().count(key))
        throw std::invalid_argument("unknown config key '" + key + "'");
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config key '" + key + "': " + e.what());
    }
  }
  cfg.validate();
}

/// Fully resolved parameters; alpha is the value actually used on `g`.
inline KeyValues config_key_values(const RegistrationConfig& cfg, const Grid& g)
{
  return {
      {"alpha", format_double(cfg.resolved_alpha(g))},
      {"s", std::to_string(cfg.s)},
      {"sigma", format_double(cfg.sigma)},
      {"nt", std::to_string(cfg.nt)},
      {"variant", to_string(cfg.variant)},
      {"max_outer", std::to_string(cfg.optimizer.max_outer)},
      {"max_pcg", std::to_string(cfg.optimizer.max_pcg)},
      {"step", format_double(cfg.optimizer.step)},
      {"ls_max", std::to_string(cfg.optimizer.ls_max)},
      {"grad_rtol", format_double(cfg.optimizer.grad_rtol)},
      {"presmooth_sigma", format_double(cfg.presmooth_sigma)},
      {"transport", to_string(cfg.transport.scheme)},
  };
}

} // namespace pdelddmm
