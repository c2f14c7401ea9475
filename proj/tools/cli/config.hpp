#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgepipe/learner.hpp"
#include "edgepipe/schedule.hpp"
#include "edgepipe/simulator.hpp"

namespace edgepipe::cli {

/// Flat "section.key" -> text settings. Every key has a default; an empty
/// value means "unset / derive". Later writes win.
class Settings {
 public:
  Settings();

  /// Reads an INI file; unknown sections or keys are rejected.
  void load_ini(const std::filesystem::path& path);
  /// "section.key=value"
  void assign(const std::string& assignment);
  void set(const std::string& key, std::string value);

  bool has(const std::string& key) const;  ///< known and non-empty
  const std::string& raw(const std::string& key) const;

  double number(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  bool boolean(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::int64_t> integers(const std::string& key) const;

  /// All settings as INI text, sections and keys in a fixed order.
  std::string to_ini() const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  void check_known(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

std::uint64_t fnv1a(const std::string& text);

/// Protocol with n_c left at 1; N is the training-set size.
ProtocolConfig protocol_template(const Settings& s, std::int64_t N);
GridPolicy grid_policy(const Settings& s);
/// The n_c values to visit: protocol.n_c if set, else the grid.
std::vector<std::int64_t> block_sizes(const Settings& s, const ProtocolConfig& tmpl);
std::vector<double> overheads(const Settings& s);
LossSpec loss_spec(const Settings& s, std::int64_t N);
InitPolicy init_policy(const Settings& s);
std::uint64_t require_seed(const Settings& s, const std::string& purpose);

}  // namespace edgepipe::cli
