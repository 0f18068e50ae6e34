#include "abcnn/model_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "abcnn/errors.hpp"

namespace abcnn {

namespace {

constexpr const char* kModelMagic = "abcnn-model v1";
constexpr const char* kClassifierMagic = "abcnn-classifier v1";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::size_t parse_size(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text[0] == '-') throw FormatError(what + ": bad count '" + text + "'");
  return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  throw FormatError(what + ": bad flag '" + text + "'");
}

// Line reader that tracks positions for error messages.
class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  std::string require(const std::string& expected) {
    std::string line;
    if (!next(line)) throw FormatError(source_ + ": unexpected end of file, expected " + expected);
    return line;
  }
  std::string where() const { return source_ + ":" + std::to_string(line_no_); }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

void write_rows(std::ostream& out, const Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

Matrix read_rows(LineReader& reader, std::size_t rows, std::size_t cols) {
  std::vector<double> values;
  values.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string line = reader.require("matrix row");
    std::istringstream ss(line);
    std::string tok;
    std::size_t n = 0;
    while (ss >> tok) {
      values.push_back(parse_double(tok, reader.where()));
      ++n;
    }
    if (n != cols) {
      throw FormatError(reader.where() + ": expected " + std::to_string(cols) + " values, found " + std::to_string(n));
    }
  }
  return Matrix(rows, cols, std::move(values));
}

struct TensorHeader {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

TensorHeader parse_tensor_header(const std::string& line, const LineReader& reader) {
  std::istringstream ss(line);
  std::string kw;
  TensorHeader h;
  std::string rows;
  std::string cols;
  std::string extra;
  if (!(ss >> kw >> h.name >> rows >> cols) || kw != "tensor" || (ss >> extra)) {
    throw FormatError(reader.where() + ": expected 'tensor <name> <rows> <cols>'");
  }
  h.rows = parse_size(rows, reader.where());
  h.cols = parse_size(cols, reader.where());
  return h;
}

void write_tensor(std::ostream& out, const std::string& name, const Matrix& m) {
  out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  write_rows(out, m);
}

std::vector<std::pair<std::string, std::string>> config_entries(const ModelConfig& c) {
  return {
      {"variant", std::string(variant_name(c.variant))},
      {"task", std::string(task_name(c.task))},
      {"num_conv_layers", std::to_string(c.num_conv_layers)},
      {"filter_width", std::to_string(c.filter_width)},
      {"hidden_dim", std::to_string(c.hidden_dim)},
      {"embedding_dim", std::to_string(c.embedding_dim)},
      {"sentence_len", std::to_string(c.sentence_len)},
      {"dynamic_pool_grid", std::to_string(c.dynamic_pool_grid)},
      {"share_attention_weights", c.share_attention_weights ? "1" : "0"},
      {"mask_padding", c.mask_padding ? "1" : "0"},
      {"dual_pipeline", c.dual_pipeline ? "1" : "0"},
      {"share_pipeline_weights", c.share_pipeline_weights ? "1" : "0"},
  };
}

void apply_config_entry(ModelConfig& c, const std::string& key, const std::string& value, const std::string& where) {
  try {
    if (key == "variant") c.variant = parse_variant(value);
    else if (key == "task") c.task = parse_task(value);
    else if (key == "num_conv_layers") c.num_conv_layers = parse_size(value, where);
    else if (key == "filter_width") c.filter_width = parse_size(value, where);
    else if (key == "hidden_dim") c.hidden_dim = parse_size(value, where);
    else if (key == "embedding_dim") c.embedding_dim = parse_size(value, where);
    else if (key == "sentence_len") c.sentence_len = parse_size(value, where);
    else if (key == "dynamic_pool_grid") c.dynamic_pool_grid = parse_size(value, where);
    else if (key == "share_attention_weights") c.share_attention_weights = parse_bool(value, where);
    else if (key == "mask_padding") c.mask_padding = parse_bool(value, where);
    else if (key == "dual_pipeline") c.dual_pipeline = parse_bool(value, where);
    else if (key == "share_pipeline_weights") c.share_pipeline_weights = parse_bool(value, where);
    else throw FormatError(where + ": unknown config key '" + key + "'");
  } catch (const ArgumentError& e) {
    throw FormatError(where + ": " + e.what());
  }
}

bool needs_quotes(const std::string& s) {
  return s.find_first_of(",\"\n") != std::string::npos || (!s.empty() && s[0] == '#');
}

std::string csv_field(const std::string& s) {
  if (!needs_quotes(s)) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> parse_csv_line(const std::string& line, const std::string& where) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"' && cur.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += ch;
    }
  }
  if (quoted) throw FormatError(where + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text, const std::string& what) {
  if (text.empty()) throw FormatError(what + ": empty number");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw FormatError(what + ": bad number '" + text + "'");
  }
  return v;
}

void write_model(std::ostream& out, const SavedModel& model) {
  check_params(model.params, model.config);
  if (model.unk_vector.size() != model.config.embedding_dim) {
    throw DimensionError("unknown-word vector does not match embedding_dim");
  }
  out << kModelMagic << '\n';
  for (const auto& [k, v] : config_entries(model.config)) out << "config " << k << ' ' << v << '\n';
  write_tensor(out, "embedding.unk", Matrix::from_column(model.unk_vector).transpose());
  for_each_tensor(model.params, [&](const TensorRef& ref, const Matrix& m) { write_tensor(out, ref.name, m); });
}

SavedModel read_model(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  if (reader.require("header") != kModelMagic) throw FormatError(reader.where() + ": not an abcnn model file");

  SavedModel model;
  std::string line;
  std::map<std::string, Matrix> tensors;
  while (reader.next(line)) {
    if (line.empty()) continue;
    if (line.rfind("config ", 0) == 0) {
      if (!tensors.empty()) throw FormatError(reader.where() + ": config line after tensors");
      std::istringstream ss(line.substr(7));
      std::string key;
      std::string value;
      std::string extra;
      if (!(ss >> key >> value) || (ss >> extra)) throw FormatError(reader.where() + ": expected 'config <key> <value>'");
      apply_config_entry(model.config, key, value, reader.where());
      continue;
    }
    const TensorHeader h = parse_tensor_header(line, reader);
    if (tensors.count(h.name)) throw FormatError(reader.where() + ": duplicate tensor " + h.name);
    tensors.emplace(h.name, read_rows(reader, h.rows, h.cols));
  }
  try {
    model.config.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(source + ": " + e.what());
  }

  auto unk = tensors.find("embedding.unk");
  if (unk == tensors.end()) throw FormatError(source + ": missing tensor embedding.unk");
  if (unk->second.rows() != 1 || unk->second.cols() != model.config.embedding_dim) {
    throw FormatError(source + ": embedding.unk has the wrong shape");
  }
  model.unk_vector.assign(unk->second.values().begin(), unk->second.values().end());
  tensors.erase(unk);

  SeededRng rng(0);
  model.params = init_params(model.config, rng);
  for_each_tensor(model.params, [&](const TensorRef& ref, Matrix& m) {
    auto it = tensors.find(ref.name);
    if (it == tensors.end()) throw FormatError(source + ": missing tensor " + ref.name);
    if (it->second.rows() != m.rows() || it->second.cols() != m.cols()) {
      throw FormatError(source + ": tensor " + ref.name + " has the wrong shape");
    }
    m = std::move(it->second);
    tensors.erase(it);
  });
  if (!tensors.empty()) throw FormatError(source + ": unexpected tensor " + tensors.begin()->first);
  return model;
}

void save_model(const std::string& path, const SavedModel& model) {
  std::ostringstream out;
  write_model(out, model);
  write_text_file(path, out.str());
}

SavedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read model '" + path + "'");
  return read_model(in, path);
}

void write_classifier(std::ostream& out, const LogisticModel& model) {
  if (model.bias.size() != model.weights.rows()) throw DimensionError("classifier bias/weights mismatch");
  out << kClassifierMagic << '\n';
  out << "classes " << model.num_classes << '\n';
  out << "l2 " << format_double(model.l2) << '\n';
  write_tensor(out, "weights", model.weights);
  write_tensor(out, "bias", Matrix::from_column(model.bias));
}

LogisticModel read_classifier(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  if (reader.require("header") != kClassifierMagic) {
    throw FormatError(reader.where() + ": not an abcnn classifier file");
  }
  LogisticModel model;
  auto keyed = [&](const std::string& key) {
    const std::string line = reader.require(key);
    if (line.rfind(key + " ", 0) != 0) throw FormatError(reader.where() + ": expected '" + key + " <value>'");
    return line.substr(key.size() + 1);
  };
  model.num_classes = parse_size(keyed("classes"), reader.where());
  model.l2 = parse_double(keyed("l2"), reader.where());
  TensorHeader h = parse_tensor_header(reader.require("weights"), reader);
  if (h.name != "weights") throw FormatError(reader.where() + ": expected weights tensor");
  model.weights = read_rows(reader, h.rows, h.cols);
  h = parse_tensor_header(reader.require("bias"), reader);
  if (h.name != "bias" || h.cols != 1 || h.rows != model.weights.rows()) {
    throw FormatError(reader.where() + ": bad bias tensor");
  }
  const Matrix bias = read_rows(reader, h.rows, 1);
  model.bias.assign(bias.values().begin(), bias.values().end());
  const std::size_t expected_rows = model.num_classes == 2 ? 1 : model.num_classes;
  if (model.num_classes < 2 || model.weights.rows() != expected_rows) {
    throw FormatError(source + ": weight rows do not match class count");
  }
  return model;
}

void save_classifier(const std::string& path, const LogisticModel& model) {
  std::ostringstream out;
  write_classifier(out, model);
  write_text_file(path, out.str());
}

LogisticModel load_classifier(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read classifier '" + path + "'");
  return read_classifier(in, path);
}

void write_feature_table(std::ostream& out, const FeatureTable& t) {
  if (t.names.size() != t.features.cols() || t.labels.size() != t.features.rows()) {
    throw DimensionError("feature table: names/labels do not match the matrix");
  }
  for (const auto& n : t.names) out << n << '\t';
  out << "label\n";
  for (std::size_t r = 0; r < t.features.rows(); ++r) {
    for (std::size_t c = 0; c < t.features.cols(); ++c) out << format_double(t.features(r, c)) << '\t';
    out << t.labels[r] << '\n';
  }
}

FeatureTable read_feature_table(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  FeatureTable t;
  t.names = split(reader.require("header"), '\t');
  if (t.names.empty() || t.names.back() != "label") throw FormatError(reader.where() + ": last column must be 'label'");
  t.names.pop_back();
  const std::size_t width = t.names.size();
  std::vector<double> values;
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    if (fields.size() != width + 1) {
      throw FormatError(reader.where() + ": expected " + std::to_string(width + 1) + " columns, found " +
                        std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < width; ++c) values.push_back(parse_double(fields[c], reader.where()));
    const double label = parse_double(fields[width], reader.where());
    if (label < 0 || label != std::floor(label)) throw FormatError(reader.where() + ": bad label");
    t.labels.push_back(static_cast<int>(label));
  }
  t.features = Matrix(t.labels.size(), width, std::move(values));
  return t;
}

void write_idf(std::ostream& out, const IdfTable& idf) {
  out << "documents\t" << idf.documents() << '\n';
  std::map<std::string, double> sorted(idf.entries().begin(), idf.entries().end());
  for (const auto& [token, v] : sorted) out << token << '\t' << format_double(v) << '\n';
}

IdfTable read_idf(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  const auto head = split(reader.require("documents"), '\t');
  if (head.size() != 2 || head[0] != "documents") throw FormatError(reader.where() + ": expected document count");
  const std::size_t documents = parse_size(head[1], reader.where());
  std::unordered_map<std::string, double> idf;
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 2) throw FormatError(reader.where() + ": expected token and idf");
    idf[f[0]] = parse_double(f[1], reader.where());
  }
  return IdfTable(std::move(idf), documents);
}

void write_pap(std::ostream& out, const PapSet& pap) {
  for (const auto& [key, count] : pap.pairs()) out << key.first << '\t' << key.second << '\t' << count << '\n';
}

PapSet read_pap(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  PapSet pap;
  std::string line;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 3) throw FormatError(reader.where() + ": expected word, word, count");
    pap.add(f[0], f[1], parse_size(f[2], reader.where()));
  }
  return pap;
}

void write_attention_csv(std::ostream& out, const AttentionExport& exp) {
  if (exp.row_labels.size() != exp.values.rows() || exp.col_labels.size() != exp.values.cols()) {
    throw DimensionError("attention export: label counts do not match the matrix");
  }
  if (!exp.title.empty()) out << "# " << exp.title << '\n';
  for (const auto& c : exp.comments) out << "# " << c << '\n';
  out << "\"\"";
  for (const auto& l : exp.col_labels) out << ',' << csv_field(l);
  out << '\n';
  for (std::size_t r = 0; r < exp.values.rows(); ++r) {
    out << csv_field(exp.row_labels[r]);
    for (std::size_t c = 0; c < exp.values.cols(); ++c) out << ',' << format_double(exp.values(r, c));
    out << '\n';
  }
}

AttentionExport read_attention_csv(std::istream& in, const std::string& source) {
  LineReader reader(in, source);
  AttentionExport exp;
  std::string line;
  bool have_header = false;
  std::vector<double> values;
  while (reader.next(line)) {
    if (!have_header && !line.empty() && line[0] == '#') {
      const std::string text = line.size() > 2 ? line.substr(2) : "";
      if (exp.title.empty() && exp.comments.empty()) exp.title = text;
      else exp.comments.push_back(text);
      continue;
    }
    if (line.empty()) continue;
    auto fields = parse_csv_line(line, reader.where());
    if (!have_header) {
      exp.col_labels.assign(fields.begin() + 1, fields.end());
      have_header = true;
      continue;
    }
    if (fields.size() != exp.col_labels.size() + 1) throw FormatError(reader.where() + ": wrong number of columns");
    exp.row_labels.push_back(fields[0]);
    for (std::size_t c = 1; c < fields.size(); ++c) values.push_back(parse_double(fields[c], reader.where()));
  }
  if (!have_header) throw FormatError(source + ": missing header row");
  exp.values = Matrix(exp.row_labels.size(), exp.col_labels.size(), std::move(values));
  return exp;
}

void write_attention_pgm(std::ostream& out, const Matrix& values) {
  double max = 0.0;
  for (double v : values.values()) max = std::max(max, v);
  out << "P5\n" << values.cols() << ' ' << values.rows() << "\n255\n";
  for (double v : values.values()) {
    const double shade = max > 0.0 ? 255.0 * (1.0 - std::max(v, 0.0) / max) : 255.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(shade))));
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace abcnn
