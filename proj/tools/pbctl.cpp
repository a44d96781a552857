// Command-line front end to libproofbuddy. Every subcommand goes through
// the C API; results are printed as the library returns them.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "proofbuddy.h"

namespace {

// Owns a string returned by the library.
struct Owned {
  char* text = nullptr;
  ~Owned() { pb_string_free(text); }
  char** out() { return &text; }
  std::string str() const { return text == nullptr ? std::string() : std::string(text); }
};

int fail(pb_status status) {
  std::cerr << "error: " << pb_status_name(status) << ": " << pb_last_error() << "\n";
  return static_cast<int>(status) + 1;
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), {});
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

const char* or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"proofbuddy command-line tools"};
  app.require_subcommand(1);
  int rc = 0;

  std::string input = "-";
  std::string locale = "en";
  std::string profile;

  auto* tokenize = app.add_subcommand("tokenize", "Print the token stream of an Isar document");
  tokenize->add_option("file", input, "Input file, - for stdin");
  tokenize->callback([&] {
    std::string text = read_input(input);
    Owned out;
    pb_status st = pb_tokenize(text.data(), text.size(), out.out());
    rc = st == PB_OK ? (write_output("", out.str()), 0) : fail(st);
  });

  auto* outline = app.add_subcommand("outline", "Group a document into commands");
  outline->add_option("file", input, "Input file, - for stdin");
  outline->add_option("--locale", locale, "Message locale (en, de)");
  outline->callback([&] {
    std::string text = read_input(input);
    Owned out;
    pb_status st = pb_outline(text.data(), text.size(), locale.c_str(), out.out());
    rc = st == PB_OK ? (write_output("", out.str()), 0) : fail(st);
  });

  auto* restrict_cmd =
      app.add_subcommand("check-restrictions", "Report restriction violations under a profile");
  restrict_cmd->add_option("file", input, "Input file, - for stdin");
  restrict_cmd->add_option("--profile", profile, "Bundled profile id")->required();
  restrict_cmd->add_option("--locale", locale, "Message locale (en, de)");
  restrict_cmd->callback([&] {
    std::string text = read_input(input);
    Owned out;
    pb_status st = pb_check_restrictions(text.data(), text.size(), profile.c_str(),
                                         locale.c_str(), out.out());
    rc = st == PB_OK ? (write_output("", out.str()), 0) : fail(st);
  });

  auto* profiles = app.add_subcommand("profiles", "List bundled syntax profiles");
  profiles->callback([&] {
    Owned out;
    pb_status st = pb_profiles(out.out());
    rc = st == PB_OK ? (write_output("", out.str()), 0) : fail(st);
  });

  std::string query;
  auto* symbols = app.add_subcommand("symbols", "Look up prover symbols");
  symbols->add_option("query", query, "Name, abbreviation or glyph fragment");
  symbols->callback([&] {
    Owned out;
    pb_status st = pb_symbols_lookup(query.c_str(), out.out());
    rc = st == PB_OK ? (write_output("", out.str()), 0) : fail(st);
  });

  std::size_t cursor = 0;
  bool cursor_at_end = true;
  auto* complete = app.add_subcommand("complete", "Completions before a cursor offset");
  complete->add_option("file", input, "Input file, - for stdin");
  auto* cursor_opt = complete->add_option("--cursor", cursor, "Byte offset (default: end)");
  complete->add_option("--profile", profile, "Bundled profile id");
  complete->callback([&] {
    std::string text = read_input(input);
    cursor_at_end = cursor_opt->count() == 0;
    Owned out;
    pb_status st = pb_complete(text.data(), text.size(), cursor_at_end ? text.size() : cursor,
                               or_null(profile), out.out());
    rc = st == PB_OK ? (write_output("", out.str()), 0) : fail(st);
  });

  std::string category;
  auto* rules = app.add_subcommand("rules", "List the rules a profile allows");
  rules->add_option("--profile", profile, "Bundled profile id");
  rules->add_option("--category", category, "Only this operator or technique");
  rules->add_option("--locale", locale, "Description locale (en, de)");
  rules->callback([&] {
    Owned out;
    pb_status st = pb_rules(or_null(profile), or_null(category), locale.c_str(), out.out());
    rc = st == PB_OK ? (write_output("", out.str()), 0) : fail(st);
  });

  // tutorial validate | assemble | info
  auto* tutorial = app.add_subcommand("tutorial", "Tutorial authoring tools");
  tutorial->require_subcommand(1);
  auto load = [&](pb_tutorial** t) {
    std::string source = read_input(input);
    return pb_tutorial_load(source.data(), source.size(), t);
  };

  auto* validate = tutorial->add_subcommand("validate", "Run the authoring checks");
  validate->add_option("file", input, "Tutorial file")->required();
  validate->add_option("--profile", profile, "Override the tutorial's profile");
  validate->add_option("--locale", locale, "Message locale (en, de)");
  validate->callback([&] {
    pb_tutorial* t = nullptr;
    pb_status st = load(&t);
    if (st != PB_OK) {
      rc = fail(st);
      return;
    }
    Owned out;
    st = pb_tutorial_validate(t, or_null(profile), locale.c_str(), out.out());
    pb_tutorial_free(t);
    if (st != PB_OK) {
      rc = fail(st);
      return;
    }
    write_output("", out.str());
    rc = out.str().find("\"severity\":\"error\"") == std::string::npos ? 0 : 1;
  });

  std::string state_file;
  std::string output;
  bool hash = false;
  bool no_preamble = false;
  auto* assemble = tutorial->add_subcommand("assemble", "Print the assembled theory");
  assemble->add_option("file", input, "Tutorial file")->required();
  assemble->add_option("--state", state_file, "Progress state JSON (default: initial content)");
  assemble->add_option("-o,--output", output, "Write the theory here");
  assemble->add_flag("--hash", hash, "Print the theory hash instead of the text");
  assemble->add_flag("--no-preamble", no_preamble, "Leave out the rule alias declarations");
  assemble->callback([&] {
    pb_tutorial* t = nullptr;
    pb_status st = load(&t);
    if (st != PB_OK) {
      rc = fail(st);
      return;
    }
    std::string state = state_file.empty() ? std::string() : read_input(state_file);
    Owned theory;
    st = pb_tutorial_assemble(t, or_null(state), no_preamble ? 0 : 1, theory.out());
    pb_tutorial_free(t);
    if (st != PB_OK) {
      rc = fail(st);
      return;
    }
    if (hash) {
      Owned h;
      std::string text = theory.str();
      st = pb_theory_hash(text.data(), text.size(), h.out());
      if (st != PB_OK) {
        rc = fail(st);
        return;
      }
      write_output(output, h.str() + "\n");
    } else {
      write_output(output, theory.str());
    }
  });

  auto* info = tutorial->add_subcommand("info", "Print the tutorial outline");
  info->add_option("file", input, "Tutorial file")->required();
  info->callback([&] {
    pb_tutorial* t = nullptr;
    pb_status st = load(&t);
    if (st != PB_OK) {
      rc = fail(st);
      return;
    }
    Owned out;
    st = pb_tutorial_info(t, out.out());
    pb_tutorial_free(t);
    rc = st == PB_OK ? (write_output("", out.str()), 0) : fail(st);
  });

  std::string mode = "structural";
  std::string fixtures;
  auto* check = app.add_subcommand("check", "Check a theory with the offline mock prover");
  check->add_option("file", input, "Theory file, - for stdin");
  check->add_option("--mode", mode, "structural or fixture")
      ->check(CLI::IsMember({"structural", "fixture"}));
  check->add_option("--fixtures", fixtures, "Fixture file for fixture mode");
  check->callback([&] {
    std::string text = read_input(input);
    Owned out;
    pb_status st =
        pb_mock_check(mode.c_str(), or_null(fixtures), text.data(), text.size(), out.out());
    rc = st == PB_OK ? (write_output("", out.str()), 0) : fail(st);
  });

  auto* hash_cmd = app.add_subcommand("hash", "Print the theory hash of a file");
  hash_cmd->add_option("file", input, "Theory file, - for stdin");
  hash_cmd->callback([&] {
    std::string text = read_input(input);
    Owned out;
    pb_status st = pb_theory_hash(text.data(), text.size(), out.out());
    rc = st == PB_OK ? (write_output("", out.str() + "\n"), 0) : fail(st);
  });

  std::string before_file;
  std::string after_file;
  auto* diff = app.add_subcommand("diff", "Edit script between two files");
  diff->add_option("before", before_file, "Earlier version")->required();
  diff->add_option("after", after_file, "Later version")->required();
  diff->callback([&] {
    std::string before = read_input(before_file);
    std::string after = read_input(after_file);
    Owned out;
    pb_status st = pb_diff(before.data(), before.size(), after.data(), after.size(), out.out());
    rc = st == PB_OK ? (write_output("", out.str()), 0) : fail(st);
  });

  std::string ops_file;
  auto* apply = app.add_subcommand("apply", "Apply an edit script to a file");
  apply->add_option("base", before_file, "Base text")->required();
  apply->add_option("ops", ops_file, "Edit script JSON")->required();
  apply->callback([&] {
    std::string base = read_input(before_file);
    std::string ops = read_input(ops_file);
    Owned out;
    pb_status st = pb_apply_diff(base.data(), base.size(), ops.c_str(), out.out());
    if (st != PB_OK) {
      rc = fail(st);
      return;
    }
    std::cout << out.str();
  });

  std::string db_path;
  std::string course;
  std::string tutorial_id;
  std::optional<long long> from_ms;
  std::optional<long long> to_ms;
  auto* exp = app.add_subcommand("export", "Export submission history as NDJSON");
  exp->add_option("--db", db_path, "SQLite store file")->required();
  exp->add_option("--course", course, "Only this course");
  exp->add_option("--tutorial", tutorial_id, "Only this tutorial");
  exp->add_option("--from", from_ms, "Start of the range, ms since epoch (inclusive)");
  exp->add_option("--to", to_ms, "End of the range, ms since epoch (exclusive)");
  exp->callback([&] {
    std::string filter = "{";
    auto add = [&](const std::string& item) {
      if (filter.size() > 1) filter += ",";
      filter += item;
    };
    auto quote = [](const std::string& s) {
      std::string q = "\"";
      for (char c : s) {
        if (c == '"' || c == '\\') q += '\\';
        q += c;
      }
      return q + "\"";
    };
    if (!course.empty()) add("\"course\":" + quote(course));
    if (!tutorial_id.empty()) add("\"tutorial\":" + quote(tutorial_id));
    if (from_ms) add("\"from\":" + std::to_string(*from_ms));
    if (to_ms) add("\"to\":" + std::to_string(*to_ms));
    filter += "}";
    pb_store* store = nullptr;
    pb_status st = pb_store_open(db_path.c_str(), &store);
    if (st != PB_OK) {
      rc = fail(st);
      return;
    }
    Owned out;
    st = pb_store_export(store, filter.c_str(), out.out());
    pb_store_free(store);
    if (st != PB_OK) {
      rc = fail(st);
      return;
    }
    std::cout << out.str();
  });

  std::size_t roster = 0;
  int per_pair = 25;
  auto* sizing = app.add_subcommand("pool-size", "Prover instances needed for a roster");
  sizing->add_option("roster", roster, "Number of enrolled students")->required();
  sizing->add_option("--per-pair", per_pair, "Students served by one pair of instances");
  sizing->callback([&] {
    int n = pb_instances_for_roster(roster, per_pair);
    if (n < 0) {
      std::cerr << "error: " << pb_last_error() << "\n";
      rc = 2;
      return;
    }
    std::cout << n << "\n";
  });

  std::string private_out;
  std::string public_out;
  auto* gen_key = app.add_subcommand("gen-key", "Generate an RSA key pair for token signing");
  gen_key->add_option("--private", private_out, "Private key PEM output")->required();
  gen_key->add_option("--public", public_out, "Public key PEM output")->required();
  gen_key->callback([&] {
    Owned priv;
    Owned pub;
    pb_status st = pb_generate_keypair(priv.out(), pub.out());
    if (st != PB_OK) {
      rc = fail(st);
      return;
    }
    write_output(private_out, priv.str());
    write_output(public_out, pub.str());
  });

  std::string key_file;
  std::string claims;
  auto* mint = app.add_subcommand("mint-token", "Sign a development token");
  mint->add_option("--key", key_file, "Private key PEM")->required();
  mint->add_option("--claims", claims, "Claims JSON object")->required();
  mint->callback([&] {
    std::string pem = read_input(key_file);
    Owned token;
    pb_status st = pb_sign_token(claims.c_str(), pem.c_str(), token.out());
    rc = st == PB_OK ? (std::cout << token.str() << "\n", 0) : fail(st);
  });

  auto* serve = app.add_subcommand("serve", "Run the web server (configured by PB_* variables)");
  serve->callback([&] {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);
    pb_server* server = nullptr;
    pb_status st = pb_server_from_env(&server);
    if (st == PB_OK) st = pb_server_start(server);
    if (st != PB_OK) {
      rc = fail(st);
      pb_server_free(server);
      return;
    }
    std::cerr << "listening on port " << pb_server_port(server) << "\n";
    int received = 0;
    sigwait(&signals, &received);
    pb_server_stop(server);
    pb_server_free(server);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
