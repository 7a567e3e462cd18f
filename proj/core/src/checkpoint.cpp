#include "hybridflow/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hybridflow/errors.hpp"

namespace hybridflow::io {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "hybridflow-checkpoint";

}  // namespace

std::string to_json(const Checkpoint& c) {
  const hybrid::ModelSpec& spec = c.model.spec();
  json j;
  j["format"] = kFormat;
  j["version"] = kCheckpointVersion;
  j["id"] = c.id;
  j["seed"] = c.seed;
  j["spec"] = {{"arch", spec.arch},       {"p", spec.p},
               {"n", spec.n},             {"h", spec.h},
               {"share_weights", spec.share_weights},
               {"conv_channels", spec.conv_channels}};
  j["window"] = {{"n", c.window.n}, {"h", c.window.h}, {"n_d", c.window.n_d}, {"n_w", c.window.n_w}};
  j["imputation"] = std::string(impute::method_name(c.method));
  j["standardization"] = {{"mean", c.stats.mean}, {"std", c.stats.std}};
  json manifest = json::array();
  json tensors = json::object();
  for (const auto* p : c.model.parameters()) {
    manifest.push_back({{"name", p->name}, {"shape", p->value.shape()}});
    tensors[p->name] = p->value.storage();
  }
  j["manifest"] = std::move(manifest);
  j["tensors"] = std::move(tensors);
  return j.dump();
}

Checkpoint from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: not valid JSON: ") + e.what());
  }
  Checkpoint c;
  std::map<std::string, Shape> stored;
  try {
    if (j.at("format").get<std::string>() != kFormat)
      throw DataError("checkpoint: unrecognized format tag");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw DataError("checkpoint: unsupported version " + j.at("version").dump());
    c.id = j.value("id", std::string());
    c.seed = j.value("seed", std::uint64_t{0});
    const json& s = j.at("spec");
    hybrid::ModelSpec spec = hybrid::ModelSpec::make(
        s.at("arch").get<std::string>(), s.at("p").get<std::size_t>(),
        s.at("n").get<std::size_t>(), s.at("h").get<std::size_t>());
    spec.share_weights = s.value("share_weights", false);
    spec.conv_channels = s.value("conv_channels", std::size_t{1});
    const json& w = j.at("window");
    c.window = {w.at("n").get<std::size_t>(), w.at("h").get<std::size_t>(),
                w.at("n_d").get<std::size_t>(), w.at("n_w").get<std::size_t>()};
    c.method = impute::parse_method(j.at("imputation").get<std::string>());
    c.stats.mean = j.at("standardization").at("mean").get<std::vector<double>>();
    c.stats.std = j.at("standardization").at("std").get<std::vector<double>>();
    if (c.stats.mean.size() != spec.p || c.stats.std.size() != spec.p)
      throw DataError("checkpoint: standardization does not cover " + std::to_string(spec.p) +
                      " stations");
    for (const auto& entry : j.at("manifest"))
      stored[entry.at("name").get<std::string>()] = entry.at("shape").get<Shape>();

    c.model = hybrid::Model::build(spec, 0);
    std::map<std::string, Shape> expected;
    for (const auto* p : c.model.parameters()) expected[p->name] = p->value.shape();
    if (stored != expected) {
      std::ostringstream diff;
      diff << "checkpoint: manifest does not match architecture " << spec.arch << ':';
      for (const auto& [name, shape] : expected) {
        auto it = stored.find(name);
        if (it == stored.end())
          diff << "\n  - missing " << name << ' ' << shape_string(shape);
        else if (it->second != shape)
          diff << "\n  ~ " << name << " stored " << shape_string(it->second) << ", expected "
               << shape_string(shape);
      }
      for (const auto& [name, shape] : stored)
        if (!expected.count(name)) diff << "\n  + unexpected " << name << ' ' << shape_string(shape);
      throw DataError(diff.str());
    }
    const json& tensors = j.at("tensors");
    for (auto* p : c.model.parameters()) {
      auto values = tensors.at(p->name).get<std::vector<double>>();
      if (values.size() != p->value.size())
        throw DataError("checkpoint: tensor " + p->name + " holds " +
                        std::to_string(values.size()) + " values, manifest says " +
                        std::to_string(p->value.size()));
      p->value = Tensor(p->value.shape(), std::move(values));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: malformed field: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint: invalid spec: ") + e.what());
  }
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << to_json(checkpoint) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace hybridflow::io
