#include <fstream>
#include <iomanip>
#include <sstream>

#include "l2s/theory/exact_model.hpp"

// Line format (blank lines and '#' comments ignored):
//   state  <name> <depth>
//   action <state> <label> <next> <feature>
//   loss   <state> <value>
//   ref    <state> <label>
//   share  <state> <state> ...
// The first declared state is the start state.

namespace l2s {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

ExactModel parse_model(const std::string& text) {
  ExactModel m;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  // Actions may name states declared later, so apply them in a second pass.
  struct Pending {
    int line;
    std::vector<std::string> words;
  };
  std::vector<Pending> deferred;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto w = split(line);
    if (w.empty()) continue;
    if (w[0] == "state") {
      if (w.size() != 3) fail(n, "expected: state <name> <depth>");
      int depth = 0;
      try {
        std::size_t used = 0;
        depth = std::stoi(w[2], &used);
        if (used != w[2].size()) fail(n, "bad depth '" + w[2] + "'");
      } catch (const std::logic_error&) {
        fail(n, "bad depth '" + w[2] + "'");
      }
      try {
        m.add_state(w[1], depth);
      } catch (const Error& e) {
        fail(n, e.what());
      }
    } else if (w[0] == "action" || w[0] == "loss" || w[0] == "ref" || w[0] == "share") {
      deferred.push_back({n, std::move(w)});
    } else {
      fail(n, "unknown directive '" + w[0] + "'");
    }
  }
  for (const auto& p : deferred) {
    const auto& w = p.words;
    if (w[0] != "action") continue;
    if (w.size() != 5) fail(p.line, "expected: action <state> <label> <next> <feature>");
    try {
      m.add_action(w[1], w[2], w[3], w[4]);
    } catch (const Error& e) {
      fail(p.line, e.what());
    }
  }
  for (const auto& p : deferred) {
    const auto& w = p.words;
    try {
      if (w[0] == "loss") {
        if (w.size() != 3) fail(p.line, "expected: loss <state> <value>");
        double v = 0.0;
        try {
          std::size_t used = 0;
          v = std::stod(w[2], &used);
          if (used != w[2].size()) fail(p.line, "bad loss '" + w[2] + "'");
        } catch (const std::logic_error&) {
          fail(p.line, "bad loss '" + w[2] + "'");
        }
        m.set_loss(w[1], v);
      } else if (w[0] == "ref") {
        if (w.size() != 3) fail(p.line, "expected: ref <state> <label>");
        m.set_reference(w[1], w[2]);
      } else if (w[0] == "share") {
        if (w.size() < 3) fail(p.line, "share needs at least two states");
        for (std::size_t i = 1; i < w.size(); ++i) m.state_index(w[i]);
        m.declare_shared({w.begin() + 1, w.end()});
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseError && std::string(e.what()).find("line ") != std::string::npos) throw;
      fail(p.line, e.what());
    }
  }
  m.finalize();
  return m;
}

ExactModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::string to_dsl(const ExactModel& model) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t i = 0; i < model.state_count(); ++i) {
    const auto& s = model.state(static_cast<int>(i));
    out << "state " << s.name << ' ' << s.depth << '\n';
  }
  for (std::size_t i = 0; i < model.state_count(); ++i) {
    const auto& s = model.state(static_cast<int>(i));
    for (const auto& a : s.actions) {
      out << "action " << s.name << ' ' << a.label << ' ' << model.state(a.next).name << ' '
          << model.feature_name(a.feature) << '\n';
    }
    if (s.reference) out << "ref " << s.name << ' ' << s.actions[static_cast<std::size_t>(*s.reference)].label << '\n';
    if (model.is_terminal(static_cast<int>(i))) out << "loss " << s.name << ' ' << s.loss << '\n';
  }
  return out.str();
}

}  // namespace l2s
