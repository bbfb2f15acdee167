#include <spl/io.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <locale>
#include <random>
#include <sstream>
#include <string_view>
#include <system_error>

namespace spl {

namespace {

std::string located(const std::string& path, int line, const std::string& message) {
  std::ostringstream os;
  os << path;
  if (line > 0) os << ":" << line;
  os << ": " << message;
  return os.str();
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view token, T& value) {
  const char* first = token.data();
  const char* last = first + token.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

bool blank(std::string_view s) { return split_ws(s).empty(); }

struct Header {
  long long dim = -1;
  long long count = -1;
  int labeled = -1;
};

Header parse_header(const std::string& path, int line_no, std::string_view line) {
  const auto tokens = split_ws(line);
  if (tokens.size() != 4 || tokens[0] != "#")
    throw ParseError(path, line_no, "expected header '# d=<int> n=<int> labeled=<0|1>'");
  Header h;
  auto field = [&](std::string_view token, std::string_view key, auto& out) {
    if (token.substr(0, key.size()) != key || !parse_number(token.substr(key.size()), out))
      throw ParseError(path, line_no, "malformed header field '" + std::string(token) + "'");
  };
  field(tokens[1], "d=", h.dim);
  field(tokens[2], "n=", h.count);
  field(tokens[3], "labeled=", h.labeled);
  if (h.dim < 1 || h.count < 1 || (h.labeled != 0 && h.labeled != 1))
    throw ParseError(path, line_no, "header values out of range");
  return h;
}

}  // namespace

ParseError::ParseError(const std::string& path, int line, const std::string& message)
    : InputError(located(path, line, message)), line_(line) {}

FeatureFile read_feature_file(const std::string& path) {
  std::ifstream in(path);
  in.imbue(std::locale::classic());
  if (!in) throw ParseError(path, 0, "cannot open file");

  std::string line;
  int line_no = 0;
  std::optional<Header> header;
  FeatureFile file;
  long long row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    if (line.front() == '#') {
      if (header) throw ParseError(path, line_no, "duplicate header");
      header = parse_header(path, line_no, line);
      file.features.resize(header->dim, header->count);
      if (header->labeled == 1) file.labels.emplace();
      continue;
    }
    if (!header) throw ParseError(path, line_no, "data before header");
    if (row >= header->count) throw ParseError(path, line_no, "more rows than n in header");

    const auto tokens = split_ws(line);
    if (static_cast<long long>(tokens.size()) != header->dim + 1) {
      std::ostringstream os;
      os << "expected " << header->dim + 1 << " columns (label + " << header->dim << " features), got "
         << tokens.size();
      throw ParseError(path, line_no, os.str());
    }
    long long label = 0;
    if (!parse_number(tokens[0], label)) throw ParseError(path, line_no, "non-integer label '" + std::string(tokens[0]) + "'");
    if (header->labeled == 1) {
      if (label < 0) throw ParseError(path, line_no, "negative label in labeled file");
      file.labels->push_back(label);
    } else if (label != -1) {
      throw ParseError(path, line_no, "label must be -1 in an unlabeled file");
    }
    for (long long j = 0; j < header->dim; ++j) {
      double value = 0;
      const auto token = tokens[static_cast<std::size_t>(j + 1)];
      if (!parse_number(token, value) || !std::isfinite(value))
        throw ParseError(path, line_no, "non-numeric value '" + std::string(token) + "'");
      file.features(j, row) = value;
    }
    ++row;
  }
  if (!header) throw ParseError(path, line_no, "missing header");
  if (row != header->count) {
    std::ostringstream os;
    os << "header declares n=" << header->count << " but file has " << row << " rows";
    throw ParseError(path, line_no, os.str());
  }
  return file;
}

void write_feature_file(const std::string& path, const Matrix<double>& features,
                        const std::optional<std::vector<long long>>& labels) {
  if (labels && static_cast<Index>(labels->size()) != features.cols())
    throw InputError("write_feature_file: label count does not match sample count");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out.imbue(std::locale::classic());
  out << "# d=" << features.rows() << " n=" << features.cols() << " labeled=" << (labels ? 1 : 0) << "\n";
  char buf[64];
  for (Index i = 0; i < features.cols(); ++i) {
    out << (labels ? (*labels)[static_cast<std::size_t>(i)] : -1);
    for (Index j = 0; j < features.rows(); ++j) {
      const auto res = std::to_chars(buf, buf + sizeof buf, features(j, i));
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
  if (!out) throw InputError("write failed for " + path);
}

LabelDictionary::LabelDictionary(const std::vector<long long>& raw) : values_(raw) {
  std::sort(values_.begin(), values_.end());
  values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
}

ClassId LabelDictionary::encode(long long raw) const {
  const auto it = std::lower_bound(values_.begin(), values_.end(), raw);
  if (it == values_.end() || *it != raw) {
    std::ostringstream os;
    os << "label " << raw << " is not in the source label space";
    throw InputError(os.str());
  }
  return static_cast<ClassId>(it - values_.begin());
}

namespace {

DomainDataset<double> encoded(FeatureFile file, const LabelDictionary* dict, DomainTag tag) {
  DomainDataset<double> out;
  out.features = std::move(file.features);
  out.tag = tag;
  if (file.labels) {
    const LabelDictionary own = dict ? LabelDictionary() : LabelDictionary(*file.labels);
    const LabelDictionary& use = dict ? *dict : own;
    LabelVector labels;
    labels.reserve(file.labels->size());
    for (long long raw : *file.labels) labels.push_back(use.encode(raw));
    out.labels = std::move(labels);
  }
  return out;
}

}  // namespace

DomainDataset<double> load_features(const std::string& path, DomainTag tag) {
  return encoded(read_feature_file(path), nullptr, tag);
}

std::pair<DomainDataset<double>, DomainDataset<double>> load_pair(const std::string& source_path,
                                                                  const std::string& target_path) {
  FeatureFile src = read_feature_file(source_path);
  if (!src.labels) throw InputError(source_path + ": source file must be labeled");
  const LabelDictionary dict(*src.labels);
  FeatureFile tgt = read_feature_file(target_path);
  return {encoded(std::move(src), &dict, DomainTag::Source), encoded(std::move(tgt), &dict, DomainTag::Target)};
}

std::pair<DomainDataset<double>, DomainDataset<double>> gen_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2 || spec.per_class < 2 || spec.dim < 2)
    throw ConfigError("gen_synthetic: need classes >= 2, per_class >= 2, dim >= 2");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto gaussian = [&](Index rows, Index cols) {
    Matrix<double> m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = gauss(rng);
    return m;
  };
  const Index d = spec.dim;
  const Index k = spec.classes;

  // Class means along orthonormal directions so every pair sits exactly
  // `separation` apart; more classes than dimensions fall back to random
  // unit directions.
  Matrix<double> directions;
  if (k <= d) {
    Eigen::HouseholderQR<Matrix<double>> qr(gaussian(d, d));
    directions = Matrix<double>(qr.householderQ()).leftCols(k);
  } else {
    directions = gaussian(d, k);
    directions.colwise().normalize();
  }
  const Matrix<double> means = directions * (spec.separation * spec.sigma / std::sqrt(2.0));

  Vector<double> shift = gaussian(d, 1);
  shift *= spec.shift * spec.sigma / shift.norm();

  // Rotation by theta inside a random plane span(u, w).
  Eigen::HouseholderQR<Matrix<double>> plane_qr(gaussian(d, 2));
  const Matrix<double> plane = Matrix<double>(plane_qr.householderQ()).leftCols(2);
  const double theta = spec.rotation_per_shift * spec.shift;
  const Vector<double> u = plane.col(0), w = plane.col(1);
  Matrix<double> rotation = Matrix<double>::Identity(d, d);
  rotation += (std::cos(theta) - 1.0) * (u * u.transpose() + w * w.transpose());
  rotation += std::sin(theta) * (w * u.transpose() - u * w.transpose());

  const Index n = k * spec.per_class;
  auto draw = [&](DomainTag tag) {
    DomainDataset<double> ds;
    ds.tag = tag;
    ds.features.resize(d, n);
    LabelVector labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      const Index c = i / spec.per_class;
      ds.features.col(i) = means.col(c) + spec.sigma * gaussian(d, 1);
      labels[static_cast<std::size_t>(i)] = static_cast<ClassId>(c);
    }
    if (tag == DomainTag::Target) ds.features = (rotation * ds.features).colwise() + shift;
    ds.labels = std::move(labels);
    return ds;
  };
  DomainDataset<double> source = draw(DomainTag::Source);
  DomainDataset<double> target = draw(DomainTag::Target);
  return {std::move(source), std::move(target)};
}

double evaluate(const LabelVector& predictions, const LabelVector& truth) {
  return EvaluationChannel(truth).accuracy(predictions);
}

std::string format_accuracy(double accuracy) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, accuracy, std::chars_format::fixed, 1);
  return std::string(buf, res.ptr);
}

}  // namespace spl
