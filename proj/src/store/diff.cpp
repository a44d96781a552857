#include "store/diff.hpp"

#include <algorithm>

#include "common/error.hpp"
#include "common/utf8.hpp"

namespace pb::store {
namespace {

constexpr long kMaxEditDistance = 1024;

class ScriptBuilder {
 public:
  void retain(std::size_t n) { push(OpKind::retain, n, {}); }
  void remove(std::size_t n) { push(OpKind::remove, n, {}); }
  void insert(std::u32string_view points) {
    if (!points.empty()) push(OpKind::insert, 0, utf8::from_code_points(points));
  }
  EditScript take() { return std::move(ops_); }

 private:
  void push(OpKind kind, std::size_t n, std::string text) {
    if (kind != OpKind::insert && n == 0) return;
    if (!ops_.empty() && ops_.back().kind == kind) {
      ops_.back().count += n;
      ops_.back().text += text;
      return;
    }
    // keep removals ahead of insertions at one position
    if (kind == OpKind::remove && !ops_.empty() && ops_.back().kind == OpKind::insert) {
      if (ops_.size() >= 2 && ops_[ops_.size() - 2].kind == OpKind::remove) {
        ops_[ops_.size() - 2].count += n;
      } else {
        ops_.insert(ops_.end() - 1, EditOp{kind, n, {}});
      }
      return;
    }
    ops_.push_back(EditOp{kind, n, std::move(text)});
  }
  EditScript ops_;
};

enum class Step { keep, del, ins };

// Myers' greedy forward search keeping every frontier for backtracking.
// Returns false when the distance exceeds the limit.
bool myers(std::u32string_view a, std::u32string_view b, std::vector<Step>& steps) {
  const long n = static_cast<long>(a.size());
  const long m = static_cast<long>(b.size());
  const long limit = std::min(n + m, kMaxEditDistance);
  std::vector<std::vector<long>> trace;
  std::vector<long> v(2 * static_cast<std::size_t>(limit) + 3, 0);
  const long offset = limit + 1;
  for (long d = 0; d <= limit; ++d) {
    for (long k = -d; k <= d; k += 2) {
      long x;
      if (k == -d || (k != d && v[offset + k - 1] < v[offset + k + 1])) {
        x = v[offset + k + 1];
      } else {
        x = v[offset + k - 1] + 1;
      }
      long y = x - k;
      while (x < n && y < m && a[x] == b[y]) {
        ++x;
        ++y;
      }
      v[offset + k] = x;
      if (x >= n && y >= m) {
        trace.push_back(v);
        // backtrack
        long cx = n;
        long cy = m;
        for (long dd = d; dd > 0; --dd) {
          const std::vector<long>& pv = trace[static_cast<std::size_t>(dd - 1)];
          long ck = cx - cy;
          long pk = (ck == -dd || (ck != dd && pv[offset + ck - 1] < pv[offset + ck + 1]))
                        ? ck + 1
                        : ck - 1;
          long px = pv[offset + pk];
          long py = px - pk;
          while (cx > px && cy > py) {
            steps.push_back(Step::keep);
            --cx;
            --cy;
          }
          steps.push_back(pk == ck + 1 ? Step::ins : Step::del);
          cx = px;
          cy = py;
        }
        while (cx > 0 && cy > 0) {
          steps.push_back(Step::keep);
          --cx;
          --cy;
        }
        std::reverse(steps.begin(), steps.end());
        return true;
      }
    }
    trace.push_back(v);
  }
  return false;
}

}  // namespace

EditScript edit_script(std::string_view from, std::string_view to) {
  if (!utf8::is_valid(from) || !utf8::is_valid(to)) {
    throw Error(Errc::invalid_argument, "edit scripts need valid UTF-8");
  }
  std::u32string a = utf8::to_code_points(from);
  std::u32string b = utf8::to_code_points(to);
  std::size_t prefix = 0;
  while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < a.size() - prefix && suffix < b.size() - prefix &&
         a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) {
    ++suffix;
  }
  std::u32string_view mid_a(a.data() + prefix, a.size() - prefix - suffix);
  std::u32string_view mid_b(b.data() + prefix, b.size() - prefix - suffix);

  ScriptBuilder out;
  out.retain(prefix);
  std::vector<Step> steps;
  if (myers(mid_a, mid_b, steps)) {
    std::size_t ib = 0;
    for (Step s : steps) {
      switch (s) {
        case Step::keep:
          out.retain(1);
          ++ib;
          break;
        case Step::del:
          out.remove(1);
          break;
        case Step::ins:
          out.insert(mid_b.substr(ib, 1));
          ++ib;
          break;
      }
    }
  } else {
    out.remove(mid_a.size());
    out.insert(mid_b);
  }
  out.retain(suffix);
  return out.take();
}

std::string apply_script(std::string_view base, const EditScript& script) {
  std::u32string in = utf8::to_code_points(base);
  std::u32string out;
  std::size_t pos = 0;
  for (const EditOp& op : script) {
    switch (op.kind) {
      case OpKind::retain:
      case OpKind::remove:
        if (op.count > in.size() - pos) {
          throw Error(Errc::invariant_violation, "edit script runs past the base text");
        }
        if (op.kind == OpKind::retain) out.append(in, pos, op.count);
        pos += op.count;
        break;
      case OpKind::insert:
        out += utf8::to_code_points(op.text);
        break;
    }
  }
  if (pos != in.size()) {
    throw Error(Errc::invariant_violation, "edit script does not cover the base text");
  }
  return utf8::from_code_points(out);
}

}  // namespace pb::store
