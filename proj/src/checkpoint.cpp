#include "acrank/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "acrank/io.hpp"
#include "json.hpp"

namespace acrank {

using ojson = nlohmann::ordered_json;

namespace {

constexpr char kMagic[8] = {'A', 'C', 'R', 'K', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void write_raw(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw LayoutError("checkpoint truncated");
  return v;
}

ojson network_json(const NetworkConfig& c) {
  ojson j;
  j["dense_length"] = c.dense_length;
  j["series_length"] = c.series_length;
  j["context_length"] = c.context_length;
  j["query_units"] = c.query_units;
  j["lstm_units"] = c.lstm_units;
  j["context_units"] = c.context_units;
  j["merge_units"] = c.merge_units;
  j["dropout_rate"] = c.dropout_rate;
  j["seed"] = c.seed;
  j["ablate_delta_ndcg"] = c.ablate_delta_ndcg;
  j["ablate_context"] = c.ablate_context;
  return j;
}

NetworkConfig network_from(const nlohmann::json& j) {
  NetworkConfig c;
  c.dense_length = j.at("dense_length").get<int>();
  c.series_length = j.at("series_length").get<int>();
  c.context_length = j.at("context_length").get<int>();
  c.query_units = j.at("query_units").get<int>();
  c.lstm_units = j.at("lstm_units").get<int>();
  c.context_units = j.at("context_units").get<int>();
  c.merge_units = j.at("merge_units").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.ablate_delta_ndcg = j.at("ablate_delta_ndcg").get<bool>();
  c.ablate_context = j.at("ablate_context").get<bool>();
  c.validate();
  return c;
}

ojson layout_json(const FeatureLayout& l) {
  ojson j;
  j["version"] = FeatureLayout::kVersion;
  j["dense"] = FeatureLayout::dense_names();
  j["series_length"] = l.series_length;
  j["context_length"] = l.context_length;
  j["half_life_days"] = l.half_life_days;
  j["context_ttl_ms"] = l.context_ttl_ms;
  j["embedding_dim"] = l.embedding_dim;
  return j;
}

FeatureLayout layout_from(const nlohmann::json& j) {
  if (j.at("version").get<int>() != FeatureLayout::kVersion) {
    throw LayoutError("feature layout version " + j.at("version").dump() +
                      " is not supported (expected " +
                      std::to_string(FeatureLayout::kVersion) + ")");
  }
  if (j.at("dense").get<std::vector<std::string>>() != FeatureLayout::dense_names()) {
    throw LayoutError("feature layout dense block names differ from this build");
  }
  FeatureLayout l;
  l.series_length = j.at("series_length").get<int>();
  l.context_length = j.at("context_length").get<int>();
  l.half_life_days = j.at("half_life_days").get<double>();
  l.context_ttl_ms = j.at("context_ttl_ms").get<std::int64_t>();
  l.embedding_dim = j.at("embedding_dim").get<int>();
  return l;
}

ojson training_json(const TrainingMetadata& t) {
  ojson j;
  j["epochs_run"] = t.epochs_run;
  j["best_epoch"] = t.best_epoch;
  j["train_loss"] = t.train_loss;
  j["validation_loss"] = t.validation_loss;
  j["seed"] = t.seed;
  j["weight_mode"] = t.weight_mode;
  j["train_pairs"] = t.train_pairs;
  j["validation_pairs"] = t.validation_pairs;
  return j;
}

TrainingMetadata training_from(const nlohmann::json& j) {
  TrainingMetadata t;
  t.epochs_run = j.at("epochs_run").get<int>();
  t.best_epoch = j.at("best_epoch").get<int>();
  t.train_loss = j.at("train_loss").get<std::vector<double>>();
  t.validation_loss = j.at("validation_loss").get<std::vector<double>>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.weight_mode = j.at("weight_mode").get<std::string>();
  t.train_pairs = j.at("train_pairs").get<std::size_t>();
  t.validation_pairs = j.at("validation_pairs").get<std::size_t>();
  return t;
}

}  // namespace

void require_layout(const FeatureLayout& expected, const FeatureLayout& actual) {
  auto fail = [](const char* field, const std::string& a, const std::string& b) {
    throw LayoutError(std::string("feature layout mismatch in ") + field + ": model " +
                      a + ", runtime " + b);
  };
  if (expected.series_length != actual.series_length)
    fail("series_length", std::to_string(expected.series_length), std::to_string(actual.series_length));
  if (expected.context_length != actual.context_length)
    fail("context_length", std::to_string(expected.context_length), std::to_string(actual.context_length));
  if (expected.half_life_days != actual.half_life_days)
    fail("half_life_days", std::to_string(expected.half_life_days), std::to_string(actual.half_life_days));
  if (expected.context_ttl_ms != actual.context_ttl_ms)
    fail("context_ttl_ms", std::to_string(expected.context_ttl_ms), std::to_string(actual.context_ttl_ms));
  if (expected.embedding_dim != actual.embedding_dim)
    fail("embedding_dim", std::to_string(expected.embedding_dim), std::to_string(actual.embedding_dim));
}

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  ojson header;
  header["network"] = network_json(ckpt.network);
  header["feature_layout"] = layout_json(ckpt.layout);
  header["training"] = training_json(ckpt.training);
  ojson tensors = ojson::array();
  std::uint64_t offset = 0;
  ckpt.params.for_each([&](std::string_view name, const Eigen::MatrixXd& m) {
    ojson t;
    t["name"] = name;
    t["rows"] = m.rows();
    t["cols"] = m.cols();
    t["offset"] = offset;
    tensors.push_back(std::move(t));
    offset += static_cast<std::uint64_t>(m.size()) * sizeof(double);
  });
  header["tensors"] = std::move(tensors);
  const std::string text = header.dump();

  out.write(kMagic, sizeof(kMagic));
  write_raw<std::uint32_t>(out, Checkpoint::kFormatVersion);
  write_raw<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  ckpt.params.for_each([&](std::string_view, const Eigen::MatrixXd& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  });
  if (!out) throw IoError("failed writing checkpoint");
}

Checkpoint load_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw LayoutError("not a checkpoint file (bad magic)");
  }
  const auto version = read_raw<std::uint32_t>(in);
  if (version != Checkpoint::kFormatVersion) {
    throw LayoutError("unsupported checkpoint format version " + std::to_string(version));
  }
  const auto header_len = read_raw<std::uint64_t>(in);
  if (header_len > (1ULL << 30)) throw LayoutError("checkpoint header too large");
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw LayoutError("checkpoint truncated in header");

  Checkpoint ckpt;
  std::vector<nlohmann::json> tensor_table;
  try {
    const auto header = nlohmann::json::parse(text);
    ckpt.network = network_from(header.at("network"));
    ckpt.layout = layout_from(header.at("feature_layout"));
    ckpt.training = training_from(header.at("training"));
    tensor_table = header.at("tensors").get<std::vector<nlohmann::json>>();
  } catch (const nlohmann::json::exception& e) {
    throw LayoutError(std::string("malformed checkpoint header: ") + e.what());
  }

  ckpt.params = ModelParams::zeros(ckpt.network);
  std::size_t idx = 0;
  std::uint64_t offset = 0;
  ckpt.params.for_each([&](std::string_view name, Eigen::MatrixXd& m) {
    if (idx >= tensor_table.size()) throw LayoutError("checkpoint is missing tensor " + std::string(name));
    const auto& t = tensor_table[idx++];
    if (t.at("name").get<std::string>() != name || t.at("rows").get<Eigen::Index>() != m.rows() ||
        t.at("cols").get<Eigen::Index>() != m.cols() || t.at("offset").get<std::uint64_t>() != offset) {
      throw LayoutError("checkpoint tensor " + std::string(name) +
                        " does not match the network config");
    }
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw LayoutError("checkpoint truncated in tensor " + std::string(name));
    offset += static_cast<std::uint64_t>(m.size()) * sizeof(double);
  });
  if (idx != tensor_table.size()) throw LayoutError("checkpoint has unexpected extra tensors");
  if (!ckpt.params.all_finite()) throw LayoutError("checkpoint contains non-finite weights");
  return ckpt;
}

void save_checkpoint_file(const Checkpoint& ckpt, const std::string& path) {
  std::ostringstream ss(std::ios::binary);
  save_checkpoint(ckpt, ss);
  write_file_atomic(path, ss.str());
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  return load_checkpoint(in);
}

std::string export_checkpoint_text(const Checkpoint& ckpt) {
  ojson doc;
  doc["format_version"] = Checkpoint::kFormatVersion;
  doc["network"] = network_json(ckpt.network);
  doc["feature_layout"] = layout_json(ckpt.layout);
  doc["training"] = training_json(ckpt.training);
  ojson tensors = ojson::object();
  ckpt.params.for_each([&](std::string_view name, const Eigen::MatrixXd& m) {
    ojson t;
    t["shape"] = {m.rows(), m.cols()};
    std::vector<double> values(m.data(), m.data() + m.size());
    t["values_col_major"] = values;
    tensors[std::string(name)] = std::move(t);
  });
  doc["tensors"] = std::move(tensors);
  return doc.dump(2);
}

}  // namespace acrank
