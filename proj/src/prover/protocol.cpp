#include "prover/protocol.hpp"

#include "common/error.hpp"
#include "json.hpp"

namespace pb::prover::protocol {
namespace {

using nlohmann::json;

[[noreturn]] void malformed(const std::string& what) {
  throw Error(Errc::protocol_error, "malformed message: " + what);
}

json parse_line(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) malformed("not a JSON object");
  return j;
}

const std::string& get_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    malformed(std::string("missing string field '") + key + "'");
  }
  return it->get_ref<const std::string&>();
}

std::size_t get_offset(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    malformed(std::string("missing offset field '") + key + "'");
  }
  return it->get<std::size_t>();
}

json messages_to_json(const std::vector<ProverMessage>& messages) {
  json arr = json::array();
  for (const ProverMessage& m : messages) {
    arr.push_back({{"kind", to_string(m.severity)},
                   {"start", m.span.start},
                   {"end", m.span.end},
                   {"text", m.text}});
  }
  return arr;
}

json states_to_json(const std::vector<ProofState>& states) {
  json arr = json::array();
  for (const ProofState& s : states) {
    arr.push_back({{"pos", s.position}, {"text", s.text}, {"subgoals", s.open_subgoals}});
  }
  return arr;
}

std::vector<ProverMessage> messages_from_json(const json& j) {
  std::vector<ProverMessage> out;
  auto it = j.find("messages");
  if (it == j.end()) return out;
  if (!it->is_array()) malformed("'messages' must be an array");
  for (const json& m : *it) {
    if (!m.is_object()) malformed("message must be an object");
    ProverMessage msg;
    try {
      msg.severity = message_severity_from_string(get_string(m, "kind"));
    } catch (const Error&) {
      malformed("unknown message kind");
    }
    msg.span.start = get_offset(m, "start");
    msg.span.end = get_offset(m, "end");
    if (msg.span.end < msg.span.start) malformed("message end before start");
    msg.text = get_string(m, "text");
    out.push_back(std::move(msg));
  }
  return out;
}

std::vector<ProofState> states_from_json(const json& j) {
  std::vector<ProofState> out;
  auto it = j.find("states");
  if (it == j.end()) return out;
  if (!it->is_array()) malformed("'states' must be an array");
  for (const json& s : *it) {
    if (!s.is_object()) malformed("state must be an object");
    ProofState st;
    st.position = get_offset(s, "pos");
    st.text = get_string(s, "text");
    auto g = s.find("subgoals");
    if (g == s.end() || !g->is_number_integer()) malformed("state needs 'subgoals'");
    st.open_subgoals = g->get<int>();
    out.push_back(std::move(st));
  }
  return out;
}

}  // namespace

std::string_view to_string(Command command) noexcept {
  switch (command) {
    case Command::ping: return "ping";
    case Command::session_start: return "session_start";
    case Command::use_theories: return "use_theories";
    case Command::session_stop: return "session_stop";
  }
  return "ping";
}

std::string_view to_string(ReplyKind kind) noexcept {
  switch (kind) {
    case ReplyKind::ok: return "ok";
    case ReplyKind::error: return "error";
    case ReplyKind::note: return "note";
    case ReplyKind::finished: return "finished";
  }
  return "error";
}

std::string encode(const Request& r) {
  json j{{"cmd", to_string(r.command)}, {"id", r.id}};
  switch (r.command) {
    case Command::ping: break;
    case Command::session_start: j["parent"] = r.parent; break;
    case Command::use_theories:
      j["session_id"] = r.session_id;
      j["theory_text"] = r.theory_text;
      break;
    case Command::session_stop: j["session_id"] = r.session_id; break;
  }
  return j.dump() + "\n";
}

std::string encode(const Reply& r) {
  json j{{"reply", to_string(r.kind)}};
  j["id"] = r.id ? json(*r.id) : json(nullptr);
  switch (r.kind) {
    case ReplyKind::ok:
      if (!r.session_id.empty()) j["session_id"] = r.session_id;
      break;
    case ReplyKind::error: j["message"] = r.message; break;
    case ReplyKind::note:
      j["messages"] = messages_to_json(r.messages);
      break;
    case ReplyKind::finished:
      j["status"] = r.status;
      j["messages"] = messages_to_json(r.messages);
      j["states"] = states_to_json(r.states);
      break;
  }
  return j.dump() + "\n";
}

Request decode_request(std::string_view line) {
  json j = parse_line(line);
  Request r;
  const std::string& cmd = get_string(j, "cmd");
  auto id = j.find("id");
  if (id == j.end() || !id->is_number_unsigned()) malformed("missing 'id'");
  r.id = id->get<std::uint64_t>();
  if (cmd == "ping") {
    r.command = Command::ping;
  } else if (cmd == "session_start") {
    r.command = Command::session_start;
    auto p = j.find("parent");
    r.parent = (p != j.end() && p->is_string()) ? p->get<std::string>() : "Pure";
  } else if (cmd == "use_theories") {
    r.command = Command::use_theories;
    r.session_id = get_string(j, "session_id");
    r.theory_text = get_string(j, "theory_text");
  } else if (cmd == "session_stop") {
    r.command = Command::session_stop;
    r.session_id = get_string(j, "session_id");
  } else {
    malformed("unknown command '" + cmd + "'");
  }
  return r;
}

Reply decode_reply(std::string_view line) {
  json j = parse_line(line);
  Reply r;
  const std::string& kind = get_string(j, "reply");
  auto id = j.find("id");
  if (id != j.end() && id->is_number_unsigned()) {
    r.id = id->get<std::uint64_t>();
  } else if (id == j.end() || !id->is_null()) {
    malformed("bad 'id'");
  }
  if (kind == "ok") {
    r.kind = ReplyKind::ok;
    if (auto s = j.find("session_id"); s != j.end()) {
      if (!s->is_string()) malformed("'session_id' must be a string");
      r.session_id = s->get<std::string>();
    }
  } else if (kind == "error") {
    r.kind = ReplyKind::error;
    r.message = get_string(j, "message");
  } else if (kind == "note") {
    r.kind = ReplyKind::note;
    r.messages = messages_from_json(j);
  } else if (kind == "finished") {
    r.kind = ReplyKind::finished;
    r.status = get_string(j, "status");
    if (r.status != "ok" && r.status != "failed") malformed("bad status");
    r.messages = messages_from_json(j);
    r.states = states_from_json(j);
  } else {
    malformed("unknown reply '" + kind + "'");
  }
  return r;
}

}  // namespace pb::prover::protocol
