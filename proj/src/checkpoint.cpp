#include "mgnn/checkpoint.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "mgnn/errors.hpp"

namespace mgnn {

namespace {

constexpr int kFormatVersion = 1;

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next(const std::string& expected_key) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream fields(line);
      if (!expected_key.empty()) {
        std::string key;
        fields >> key;
        if (key != expected_key) throw ParseError(line_no_, "expected '" + expected_key + "', got '" + key + "'");
      }
      return fields;
    }
    throw ParseError(0, "checkpoint truncated before '" + expected_key + "'");
  }

  std::size_t line() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

template <class T>
T field(std::istringstream& fields, const LineReader& reader, const char* what) {
  T value{};
  if (!(fields >> value)) throw ParseError(reader.line(), std::string("missing or malformed ") + what);
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  const auto& model = checkpoint.model;
  const auto& cfg = checkpoint.config;
  model.validate();
  out << std::setprecision(17);
  out << "mgnn-checkpoint " << kFormatVersion << '\n';
  out << "nonlinearity " << to_string(model.nonlinearity) << '\n';
  out << "widths";
  for (int w : model.widths()) out << ' ' << w;
  out << '\n';
  out << "taps " << model.num_taps() << '\n';
  out << "train " << cfg.learning_rate << ' ' << cfg.beta1 << ' ' << cfg.beta2 << ' ' << cfg.epsilon << ' '
      << cfg.batch_size << ' ' << cfg.epochs << ' ' << cfg.seed << '\n';
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& bank = model.layers[l];
    out << "layer " << l + 1 << '\n';
    for (int p = 0; p < bank.out_features(); ++p) {
      for (int q = 0; q < bank.in_features(); ++q) {
        out << p << ' ' << q;
        for (int k = 0; k < bank.num_taps(); ++k) out << ' ' << bank.tap(p, q, k);
        out << '\n';
      }
    }
  }
  out << "readout";
  for (Eigen::Index p = 0; p < model.readout.weights.size(); ++p) out << ' ' << model.readout.weights(p);
  out << '\n';
  out << "bias " << model.readout.bias << '\n';
  out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
  LineReader reader(in);
  Checkpoint cp;

  auto header = reader.next("mgnn-checkpoint");
  const int version = field<int>(header, reader, "version");
  if (version != kFormatVersion) {
    throw ParseError(reader.line(), "unsupported checkpoint version " + std::to_string(version));
  }

  auto sigma = reader.next("nonlinearity");
  try {
    cp.model.nonlinearity = parse_nonlinearity(field<std::string>(sigma, reader, "nonlinearity"));
  } catch (const InvalidArgument& e) {
    throw ParseError(reader.line(), e.what());
  }

  auto widths_line = reader.next("widths");
  std::vector<int> widths;
  int w = 0;
  while (widths_line >> w) {
    if (w < 1) throw ParseError(reader.line(), "widths must be positive");
    widths.push_back(w);
  }
  if (widths.size() < 2) throw ParseError(reader.line(), "need at least two widths");

  auto taps_line = reader.next("taps");
  const int taps = field<int>(taps_line, reader, "tap count");
  if (taps < 1) throw ParseError(reader.line(), "tap count must be positive");

  auto train_line = reader.next("train");
  auto& cfg = cp.config;
  cfg.learning_rate = field<double>(train_line, reader, "learning rate");
  cfg.beta1 = field<double>(train_line, reader, "beta1");
  cfg.beta2 = field<double>(train_line, reader, "beta2");
  cfg.epsilon = field<double>(train_line, reader, "epsilon");
  cfg.batch_size = field<int>(train_line, reader, "batch size");
  cfg.epochs = field<int>(train_line, reader, "epochs");
  cfg.seed = field<std::uint64_t>(train_line, reader, "seed");

  for (std::size_t l = 1; l < widths.size(); ++l) {
    auto layer_line = reader.next("layer");
    if (field<std::size_t>(layer_line, reader, "layer index") != l) {
      throw ParseError(reader.line(), "layers out of order");
    }
    FilterBank bank(widths[l - 1], widths[l], taps);
    for (int p = 0; p < widths[l]; ++p) {
      for (int q = 0; q < widths[l - 1]; ++q) {
        auto row = reader.next("");
        if (field<int>(row, reader, "p") != p || field<int>(row, reader, "q") != q) {
          throw ParseError(reader.line(), "filter rows out of order");
        }
        for (int k = 0; k < taps; ++k) bank.tap(p, q, k) = field<double>(row, reader, "tap");
      }
    }
    cp.model.layers.push_back(std::move(bank));
  }

  auto readout = reader.next("readout");
  cp.model.readout.weights.resize(widths.back());
  for (int p = 0; p < widths.back(); ++p) cp.model.readout.weights(p) = field<double>(readout, reader, "readout weight");
  auto bias = reader.next("bias");
  cp.model.readout.bias = field<double>(bias, reader, "bias");
  reader.next("end");

  try {
    cp.model.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(reader.line(), e.what());
  }
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, checkpoint);
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace mgnn
