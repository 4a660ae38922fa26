#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>

#include "grove/error.h"
#include "grove/io.h"

namespace grove {

namespace {

constexpr std::array<std::uint8_t, 8> kMagic = {'G', 'R', 'O', 'V', 'E', 'F', '1', '\0'};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    const auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    const auto b = take(n);
    return std::string(b.begin(), b.end());
  }
  // Element count bounded by the remaining bytes, so corrupt lengths cannot
  // trigger huge allocations.
  std::size_t count(std::size_t min_element_bytes) {
    const auto n = u32();
    if (min_element_bytes > 0 && n > remaining() / min_element_bytes) {
      throw ForestFileError("corrupt forest file: element count exceeds file size");
    }
    return n;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) {
      throw ForestFileError("truncated forest file");
    }
    const auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void validate_tree(const TreeModel& tree, std::size_t num_features, std::size_t width) {
  const auto nodes = tree.num_nodes();
  if (nodes == 0 || tree.payload_width != width) {
    throw ForestFileError("corrupt forest file: invalid tree");
  }
  for (std::size_t i = 0; i < nodes; ++i) {
    if (tree.left_child[i] == 0) {
      if (tree.right_child[i] != 0 || tree.leaf_index[i] >= tree.num_leaves()) {
        throw ForestFileError("corrupt forest file: invalid terminal node");
      }
    } else if (tree.left_child[i] <= i || tree.right_child[i] <= i || tree.left_child[i] >= nodes ||
               tree.right_child[i] >= nodes || tree.split_feature[i] >= num_features) {
      throw ForestFileError("corrupt forest file: invalid split node");
    }
  }
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string format_number(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

std::vector<std::uint8_t> serialize_forest(const ForestModel& forest) {
  ByteWriter w;
  w.raw(kMagic);
  w.u8(kForestFileVersion);
  w.u8(static_cast<std::uint8_t>(forest.config.tree_type));
  w.u8(static_cast<std::uint8_t>(forest.config.importance_mode));
  w.u32(static_cast<std::uint32_t>(forest.trees.size()));
  w.u32(forest.config.mtry);
  w.u32(forest.config.min_node_size);
  w.u64(forest.config.seed);
  w.u64(forest.num_samples);

  w.u32(static_cast<std::uint32_t>(forest.feature_names.size()));
  for (const auto& name : forest.feature_names) w.str(name);
  w.u32(static_cast<std::uint32_t>(forest.classes.size()));
  for (const auto& name : forest.classes) w.str(name);
  w.u32(static_cast<std::uint32_t>(forest.timepoints.size()));
  for (double t : forest.timepoints) w.f64(t);
  w.u32(static_cast<std::uint32_t>(forest.split_importance_sum.size()));
  for (double v : forest.split_importance_sum) w.f64(v);

  for (const auto& tree : forest.trees) {
    w.u32(tree.payload_width);
    w.u32(static_cast<std::uint32_t>(tree.num_nodes()));
    for (std::size_t i = 0; i < tree.num_nodes(); ++i) {
      w.u32(tree.split_feature[i]);
      w.f64(tree.split_threshold[i]);
      w.u32(tree.left_child[i]);
      w.u32(tree.right_child[i]);
      w.u32(tree.leaf_index[i]);
    }
    w.u32(static_cast<std::uint32_t>(tree.num_leaves()));
    for (double v : tree.leaf_values) w.f64(v);
  }
  w.u64(fnv1a64(w.bytes()));
  return std::move(w.bytes());
}

ForestModel deserialize_forest(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw ForestFileError("bad magic: not a forest file");
  }
  if (bytes.size() < kMagic.size() + 1 + 8) {
    throw ForestFileError("truncated forest file");
  }
  const auto version = bytes[kMagic.size()];
  if (version != kForestFileVersion) {
    throw ForestFileError("unknown forest file version " + std::to_string(version));
  }
  const auto body = bytes.first(bytes.size() - 8);
  ByteReader trailer(bytes.last(8));
  if (trailer.u64() != fnv1a64(body)) {
    throw ForestFileError("forest file checksum mismatch");
  }

  ByteReader r(body.subspan(kMagic.size() + 1));
  ForestModel forest;
  const auto type = tree_type_from_code(r.u8());
  if (!type) {
    throw ForestFileError("corrupt forest file: unknown tree type");
  }
  forest.config.tree_type = *type;
  const auto importance = r.u8();
  if (importance > 3) {
    throw ForestFileError("corrupt forest file: unknown importance mode");
  }
  forest.config.importance_mode = static_cast<ImportanceMode>(importance);
  const auto num_trees = r.u32();
  forest.config.num_trees = num_trees;
  forest.config.mtry = r.u32();
  forest.config.min_node_size = r.u32();
  forest.config.seed = r.u64();
  forest.num_samples = r.u64();

  forest.feature_names.resize(r.count(4));
  for (auto& name : forest.feature_names) name = r.str();
  forest.classes.resize(r.count(4));
  for (auto& name : forest.classes) name = r.str();
  forest.timepoints.resize(r.count(8));
  for (auto& t : forest.timepoints) t = r.f64();
  forest.split_importance_sum.resize(r.count(8));
  for (auto& v : forest.split_importance_sum) v = r.f64();

  const auto width = forest.prediction_width();
  if (num_trees > r.remaining() / 8) {
    throw ForestFileError("corrupt forest file: tree count exceeds file size");
  }
  forest.trees.resize(num_trees);
  for (auto& tree : forest.trees) {
    tree.payload_width = r.u32();
    const auto nodes = r.count(24);
    tree.split_feature.resize(nodes);
    tree.split_threshold.resize(nodes);
    tree.left_child.resize(nodes);
    tree.right_child.resize(nodes);
    tree.leaf_index.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
      tree.split_feature[i] = r.u32();
      tree.split_threshold[i] = r.f64();
      tree.left_child[i] = r.u32();
      tree.right_child[i] = r.u32();
      tree.leaf_index[i] = r.u32();
    }
    const auto leaves = r.count(8);
    if (tree.payload_width != 0 && leaves > r.remaining() / 8 / tree.payload_width) {
      throw ForestFileError("corrupt forest file: leaf payload exceeds file size");
    }
    tree.leaf_values.resize(leaves * tree.payload_width);
    for (auto& v : tree.leaf_values) v = r.f64();
    validate_tree(tree, forest.feature_names.size(), width);
  }
  if (r.remaining() != 0) {
    throw ForestFileError("corrupt forest file: trailing bytes");
  }
  return forest;
}

void save_forest(const ForestModel& forest, const std::filesystem::path& path) {
  const auto bytes = serialize_forest(forest);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ForestFileError("cannot write forest file '" + path.string() + "'");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw ForestFileError("failed writing forest file '" + path.string() + "'");
  }
}

ForestModel load_forest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ForestFileError("cannot open forest file '" + path.string() + "'");
  }
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_forest(bytes);
}

}  // namespace grove
