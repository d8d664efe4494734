#pragma once

// Checkpoint text format (one file, line oriented, '\n' endings):
//
//   transa-checkpoint 1
//   variant <transe|transa|psd>
//   dim <k>
//   entities <count> <vocab-hash>
//   <name>\t<v_1> ... <v_k>            (count lines)
//   relations <count> <vocab-hash>
//   <name>\t<v_1> ... <v_k>            (count lines)
//   weights <count>                    (0 for transe, else relation count)
//   <k lines of k values per matrix, matrices in relation id order>
//   end
//
// Values are written with 17 significant digits so that loading reproduces
// every double bit for bit. The vocabulary hash is FNV-1a (64 bit, hex) over
// the names in id order, each followed by '\n'.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "transa/model.hpp"

namespace transa {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::uint64_t vocabulary_hash(const std::vector<std::string>& names) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& n : names) {
    for (unsigned char c : n) mix(c);
    mix('\n');
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

namespace detail {

inline void write_double(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc{}) throw CheckpointError("cannot format value");
  out.append(buf, end);
}

inline void write_row(std::string& out, std::span<const double> row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(' ');
    write_double(out, row[i]);
  }
  out.push_back('\n');
}

inline void parse_row(std::string_view text, std::span<double> out, std::size_t line_no) {
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    while (p < end && *p == ' ') ++p;
    auto [next, ec] = std::from_chars(p, end, out[i]);
    if (ec != std::errc{}) throw CheckpointError("line " + std::to_string(line_no) + ": bad number");
    p = next;
  }
  while (p < end && *p == ' ') ++p;
  if (p != end) throw CheckpointError("line " + std::to_string(line_no) + ": too many values");
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}
  std::string next() {
    std::string line;
    if (!std::getline(in_, line)) throw CheckpointError("unexpected end of checkpoint at line " + std::to_string(no_ + 1));
    ++no_;
    return line;
  }
  std::size_t line_no() const noexcept { return no_; }

 private:
  std::istream& in_;
  std::size_t no_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const EmbeddingModel& m) {
  std::string out;
  out += "transa-checkpoint 1\n";
  out += std::string("variant ") + to_string(m.variant) + "\n";
  out += "dim " + std::to_string(m.dim) + "\n";
  auto table = [&](const char* tag, const Matrix& vecs, const std::vector<std::string>& names) {
    if (names.size() != vecs.rows()) throw CheckpointError(std::string(tag) + ": names and rows differ");
    out += std::string(tag) + " " + std::to_string(vecs.rows()) + " " + hex64(vocabulary_hash(names)) + "\n";
    for (std::size_t i = 0; i < vecs.rows(); ++i) {
      out += names[i];
      out.push_back('\t');
      detail::write_row(out, vecs.row(i));
    }
  };
  table("entities", m.entities, m.entity_names);
  table("relations", m.relations, m.relation_names);
  out += "weights " + std::to_string(m.weights.size()) + "\n";
  for (const auto& w : m.weights)
    for (std::size_t i = 0; i < w.rows(); ++i) detail::write_row(out, w.row(i));
  out += "end\n";
  return out;
}

inline EmbeddingModel parse_checkpoint(std::istream& in) {
  detail::LineReader lr(in);
  auto expect_word = [&](const std::string& line, const std::string& word) {
    std::istringstream is(line);
    std::string w;
    is >> w;
    if (w != word) throw CheckpointError("line " + std::to_string(lr.line_no()) + ": expected '" + word + "'");
    return is;
  };

  if (lr.next() != "transa-checkpoint 1") throw CheckpointError("not a checkpoint file (bad magic line)");
  EmbeddingModel m;
  {
    auto is = expect_word(lr.next(), "variant");
    std::string v;
    is >> v;
    m.variant = parse_variant(v);
  }
  {
    auto is = expect_word(lr.next(), "dim");
    if (!(is >> m.dim) || m.dim == 0 || m.dim > kMaxDimension) throw CheckpointError("bad dimension");
  }
  auto table = [&](const char* tag, Matrix& vecs, std::vector<std::string>& names) {
    auto is = expect_word(lr.next(), tag);
    std::size_t count = 0;
    std::string hash;
    if (!(is >> count >> hash)) throw CheckpointError(std::string("bad ") + tag + " header");
    vecs = Matrix(count, m.dim);
    names.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto line = lr.next();
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw CheckpointError("line " + std::to_string(lr.line_no()) + ": missing name");
      names[i] = line.substr(0, tab);
      detail::parse_row(std::string_view(line).substr(tab + 1), vecs.row(i), lr.line_no());
    }
    if (hex64(vocabulary_hash(names)) != hash) throw CheckpointError(std::string(tag) + ": vocabulary hash mismatch");
  };
  table("entities", m.entities, m.entity_names);
  table("relations", m.relations, m.relation_names);
  {
    auto is = expect_word(lr.next(), "weights");
    std::size_t count = 0;
    if (!(is >> count)) throw CheckpointError("bad weights header");
    if (count != (has_weights(m.variant) ? m.num_relations() : 0))
      throw CheckpointError("weight matrix count does not match variant");
    m.weights.assign(count, Matrix(m.dim, m.dim));
    for (auto& w : m.weights)
      for (std::size_t i = 0; i < m.dim; ++i) detail::parse_row(lr.next(), w.row(i), lr.line_no());
  }
  if (lr.next() != "end") throw CheckpointError("missing end marker");
  return m;
}

inline void save_checkpoint(const EmbeddingModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out << serialize_checkpoint(m);
  if (!out) throw CheckpointError("write failed: " + path.string());
}

inline EmbeddingModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  return parse_checkpoint(in);
}

/// Throws unless the model's vocabularies are exactly the dataset's.
inline void check_vocabulary(const EmbeddingModel& m, const TripleSet& ts) {
  if (vocabulary_hash(m.entity_names) != vocabulary_hash(ts.entities.names()) ||
      vocabulary_hash(m.relation_names) != vocabulary_hash(ts.relations.names()))
    throw CheckpointError("checkpoint vocabulary does not match the dataset");
}

}  // namespace transa
