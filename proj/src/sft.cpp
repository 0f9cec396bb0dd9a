#include "hitlaw/sft.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <queue>
#include <set>

#include "hitlaw/error.hpp"

namespace hitlaw {

// ---------------------------------------------------------------------------
// Alphabet

Alphabet::Alphabet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw Error(ErrorCode::InvalidAlphabet, "alphabet is empty");
  std::set<std::string_view> seen;
  for (const auto& label : labels_) {
    if (label.empty()) throw Error(ErrorCode::InvalidAlphabet, "empty symbol label");
    if (!seen.insert(label).second) {
      throw Error(ErrorCode::InvalidAlphabet, "duplicate symbol label '" + label + "'");
    }
  }
}

Alphabet Alphabet::numbered(std::size_t size) {
  std::vector<std::string> labels(size);
  for (std::size_t i = 0; i < size; ++i) labels[i] = std::to_string(i + 1);
  return Alphabet(std::move(labels));
}

std::optional<Symbol> Alphabet::find(std::string_view label) const noexcept {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<Symbol>(it - labels_.begin());
}

Symbol Alphabet::symbol(std::string_view label) const {
  if (auto s = find(label)) return *s;
  throw Error(ErrorCode::UnknownSymbol, "unknown symbol '" + std::string(label) + "'");
}

// ---------------------------------------------------------------------------
// Graph structure

namespace {

std::vector<bool> reachable(std::span<const std::vector<Symbol>> adj, Symbol start) {
  std::vector<bool> seen(adj.size(), false);
  std::vector<Symbol> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const Symbol v = stack.back();
    stack.pop_back();
    for (Symbol w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
    }
  }
  return seen;
}

}  // namespace

GraphFlags analyze_graph(std::span<const std::vector<Symbol>> successors) {
  GraphFlags flags;
  const std::size_t n = successors.size();
  if (n == 0) return flags;
  bool any_edge = false;
  std::vector<std::vector<Symbol>> reverse(n);
  for (Symbol a = 0; a < n; ++a) {
    for (Symbol b : successors[a]) {
      reverse[b].push_back(a);
      any_edge = true;
    }
  }
  if (!any_edge) return flags;
  const auto fwd = reachable(successors, 0);
  const auto bwd = reachable(reverse, 0);
  if (std::find(fwd.begin(), fwd.end(), false) != fwd.end() ||
      std::find(bwd.begin(), bwd.end(), false) != bwd.end()) {
    return flags;
  }
  flags.irreducible = true;

  // Period = gcd over edges (u,v) of level(u) + 1 - level(v), BFS levels from 0.
  std::vector<long> level(n, -1);
  std::queue<Symbol> queue;
  level[0] = 0;
  queue.push(0);
  while (!queue.empty()) {
    const Symbol v = queue.front();
    queue.pop();
    for (Symbol w : successors[v]) {
      if (level[w] < 0) {
        level[w] = level[v] + 1;
        queue.push(w);
      }
    }
  }
  long g = 0;
  for (Symbol u = 0; u < n; ++u) {
    for (Symbol v : successors[u]) g = std::gcd(g, std::abs(level[u] + 1 - level[v]));
  }
  flags.period = static_cast<std::size_t>(g);
  flags.aperiodic = g == 1;
  return flags;
}

// ---------------------------------------------------------------------------
// TransitionSystem

namespace {

CsrMatrix adjacency_from(std::size_t n, std::vector<std::vector<Symbol>>& successors) {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> indices;
  for (auto& row : successors) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    for (Symbol b : row) {
      if (b >= n) throw Error(ErrorCode::UnknownSymbol, "successor index out of range");
      indices.push_back(b);
    }
    offsets.push_back(indices.size());
  }
  std::vector<double> ones(indices.size(), 1.0);
  return CsrMatrix(n, n, std::move(offsets), std::move(indices), std::move(ones));
}

}  // namespace

TransitionSystem::TransitionSystem(Alphabet alphabet, std::vector<std::vector<Symbol>> successors)
    : alphabet_(std::move(alphabet)) {
  if (successors.size() != alphabet_.size()) {
    throw Error(ErrorCode::NotSquare, "successor lists do not match the alphabet size");
  }
  adjacency_ = adjacency_from(alphabet_.size(), successors);
  reverse_ = adjacency_.transposed();
  flags_ = analyze_graph(successors);
}

bool TransitionSystem::allowed(Symbol a, Symbol b) const noexcept {
  return a < size() && b < size() && edge_index(a, b).has_value();
}

std::optional<std::size_t> TransitionSystem::edge_index(Symbol a, Symbol b) const noexcept {
  if (a >= size()) return std::nullopt;
  const auto row = adjacency_.row_indices(a);
  const auto it = std::lower_bound(row.begin(), row.end(), b);
  if (it == row.end() || *it != b) return std::nullopt;
  return adjacency_.offsets()[a] + static_cast<std::size_t>(it - row.begin());
}

std::vector<std::vector<int>> TransitionSystem::dense() const {
  std::vector<std::vector<int>> m(size(), std::vector<int>(size(), 0));
  for (Symbol a = 0; a < size(); ++a) {
    for (Symbol b : successors(a)) m[a][b] = 1;
  }
  return m;
}

SystemPtr build_system(const std::vector<std::vector<int>>& matrix, std::optional<Alphabet> labels) {
  const std::size_t n = matrix.size();
  if (n == 0) throw Error(ErrorCode::NotSquare, "matrix is empty");
  for (std::size_t r = 0; r < n; ++r) {
    if (matrix[r].size() != n) {
      throw Error(ErrorCode::NotSquare, "row " + std::to_string(r) + " has " +
                                            std::to_string(matrix[r].size()) + " entries, expected " +
                                            std::to_string(n));
    }
  }
  std::vector<std::vector<Symbol>> successors(n);
  std::vector<bool> has_pred(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const int v = matrix[r][c];
      if (v != 0 && v != 1) {
        throw Error(ErrorCode::InvalidArgument, "entry (" + std::to_string(r) + "," +
                                                    std::to_string(c) + ") is not 0 or 1");
      }
      if (v == 1) {
        successors[r].push_back(static_cast<Symbol>(c));
        has_pred[c] = true;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (successors[i].empty()) {
      throw Error(ErrorCode::ZeroRowOrColumn, "row " + std::to_string(i) + " has no successor");
    }
    if (!has_pred[i]) {
      throw Error(ErrorCode::ZeroRowOrColumn, "column " + std::to_string(i) + " has no predecessor");
    }
  }
  Alphabet alphabet = labels ? std::move(*labels) : Alphabet::numbered(n);
  if (alphabet.size() != n) throw Error(ErrorCode::InvalidAlphabet, "label count differs from matrix size");
  return std::make_shared<const TransitionSystem>(std::move(alphabet), std::move(successors));
}

// ---------------------------------------------------------------------------
// SubAlphabet

SubAlphabet build_subalphabet(SystemPtr system, std::span<const Symbol> members) {
  const std::size_t n = system->size();
  std::vector<Symbol> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (!sorted.empty() && sorted.back() >= n) {
    throw Error(ErrorCode::UnknownSymbol, "sub-alphabet member out of range");
  }
  if (sorted.empty() || sorted.size() == n) {
    throw Error(ErrorCode::NotProperSubset, "sub-alphabet must be a proper nonempty subset");
  }
  SubAlphabet sub;
  sub.parent_ = std::move(system);
  sub.members_ = std::move(sorted);
  sub.local_.assign(n, SubAlphabet::npos);
  sub.table_.assign(n, 0);
  for (std::size_t i = 0; i < sub.members_.size(); ++i) {
    sub.local_[sub.members_[i]] = i;
    sub.table_[sub.members_[i]] = -1;
  }
  std::vector<std::vector<Symbol>> restricted(sub.members_.size());
  for (std::size_t i = 0; i < sub.members_.size(); ++i) {
    for (Symbol b : sub.parent_->successors(sub.members_[i])) {
      if (sub.contains(b)) restricted[i].push_back(static_cast<Symbol>(sub.local_[b]));
    }
  }
  sub.flags_ = analyze_graph(restricted);
  return sub;
}

SubAlphabet build_subalphabet(SystemPtr system, const std::vector<std::string>& labels) {
  std::vector<Symbol> members;
  for (const auto& label : labels) members.push_back(system->alphabet().symbol(label));
  return build_subalphabet(std::move(system), members);
}

SystemPtr restricted_system(const SubAlphabet& sub) {
  std::vector<std::string> labels;
  std::vector<std::vector<Symbol>> successors(sub.size());
  for (std::size_t i = 0; i < sub.size(); ++i) {
    const Symbol a = sub.members()[i];
    labels.push_back(sub.parent()->alphabet().label(a));
    for (Symbol b : sub.parent()->successors(a)) {
      if (sub.contains(b)) successors[i].push_back(static_cast<Symbol>(sub.local_index(b)));
    }
  }
  return std::make_shared<const TransitionSystem>(Alphabet(std::move(labels)), std::move(successors));
}

// ---------------------------------------------------------------------------
// Words

bool is_allowed(const TransitionSystem& system, const Word& word) noexcept {
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (word.symbols[i] >= system.size()) return false;
    if (i > 0 && !system.allowed(word.symbols[i - 1], word.symbols[i])) return false;
  }
  return true;
}

void require_allowed(const TransitionSystem& system, const Word& word) {
  if (!is_allowed(system, word)) {
    throw Error(ErrorCode::DisallowedWord, "word '" + format_word(system, word) + "' is not allowed");
  }
}

Word parse_word(const TransitionSystem& system, const std::vector<std::string>& labels) {
  Word w;
  for (const auto& label : labels) w.symbols.push_back(system.alphabet().symbol(label));
  return w;
}

std::string format_word(const TransitionSystem& system, const Word& word) {
  bool compact = true;
  for (const auto& label : system.alphabet().labels()) compact = compact && label.size() == 1;
  std::string out;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (!compact && i > 0) out += '.';
    out += word.symbols[i] < system.size() ? system.alphabet().label(word.symbols[i]) : "?";
  }
  return out;
}

std::pair<SystemPtr, RecodingMap> recode_higher_block(const TransitionSystem& system,
                                                      std::size_t block_length) {
  if (block_length < 2) throw Error(ErrorCode::InvalidArgument, "block length must be >= 2");
  const std::size_t width = block_length - 1;
  // Borrow a non-owning pointer for enumeration; the enumerator does not outlive this call.
  SystemPtr view(std::shared_ptr<const TransitionSystem>{}, &system);
  WordEnumerator words(view, width);
  RecodingMap map;
  map.block_length = block_length;
  std::map<std::vector<Symbol>, Symbol> index;
  while (auto w = words.next()) {
    index.emplace(w->symbols, static_cast<Symbol>(map.projection.size()));
    map.projection.push_back(std::move(w->symbols));
  }
  if (map.projection.empty()) throw Error(ErrorCode::NoAllowedWords, "no allowed blocks");

  std::vector<std::vector<Symbol>> successors(map.projection.size());
  std::vector<std::string> labels;
  for (std::size_t s = 0; s < map.projection.size(); ++s) {
    const auto& block = map.projection[s];
    labels.push_back(format_word(system, Word{block}));
    std::vector<Symbol> shifted(block.begin() + 1, block.end());
    for (Symbol c : system.successors(block.back())) {
      shifted.push_back(c);
      successors[s].push_back(index.at(shifted));
      shifted.pop_back();
    }
  }
  auto recoded =
      std::make_shared<const TransitionSystem>(Alphabet(std::move(labels)), std::move(successors));
  return {std::move(recoded), std::move(map)};
}

std::uint64_t count_words(const TransitionSystem& system, std::size_t length,
                          const SubAlphabet* restrict_to) {
  if (length == 0) return 1;
  const std::size_t n = system.size();
  auto admissible = [&](Symbol s) { return restrict_to == nullptr || restrict_to->contains(s); };
  constexpr std::uint64_t saturated = UINT64_MAX;
  std::vector<std::uint64_t> v(n), next(n);
  for (Symbol a = 0; a < n; ++a) v[a] = admissible(a) ? 1 : 0;
  for (std::size_t step = 1; step < length; ++step) {
    for (Symbol a = 0; a < n; ++a) {
      std::uint64_t acc = 0;
      if (admissible(a)) {
        for (Symbol b : system.successors(a)) {
          if (__builtin_add_overflow(acc, v[b], &acc)) acc = saturated;
        }
      }
      next[a] = acc;
    }
    v.swap(next);
  }
  std::uint64_t total = 0;
  for (auto x : v) {
    if (__builtin_add_overflow(total, x, &total)) return saturated;
  }
  return total;
}

// ---------------------------------------------------------------------------
// WordEnumerator

WordEnumerator::WordEnumerator(SystemPtr system, std::size_t length, const SubAlphabet* restrict_to,
                               std::uint64_t cap)
    : system_(std::move(system)), length_(length) {
  if (length_ == 0) throw Error(ErrorCode::InvalidArgument, "word length must be >= 1");
  count_ = count_words(*system_, length_, restrict_to);
  if (count_ > cap) {
    throw Error(ErrorCode::LengthOverflow,
                std::to_string(count_) + " words of length " + std::to_string(length_) +
                    " exceed the cap " + std::to_string(cap));
  }
  allowed_.assign(system_->size(), 1);
  if (restrict_to) {
    for (Symbol s = 0; s < system_->size(); ++s) allowed_[s] = restrict_to->contains(s) ? 1 : 0;
  }
  current_.assign(length_, 0);
  cursor_.assign(length_, 0);
}

bool WordEnumerator::admissible(Symbol s) const noexcept { return allowed_[s] != 0; }

// Depth-first search for the next complete word. Levels below `depth` are fixed;
// cursor_[depth] is where the search at that level resumes.
bool WordEnumerator::descend(std::size_t depth) {
  const std::size_t n = system_->size();
  while (true) {
    std::size_t limit = depth == 0 ? n : system_->successors(current_[depth - 1]).size();
    auto candidate = [&](std::size_t i) -> Symbol {
      return depth == 0 ? static_cast<Symbol>(i) : system_->successors(current_[depth - 1])[i];
    };
    while (cursor_[depth] < limit && !admissible(candidate(cursor_[depth]))) ++cursor_[depth];
    if (cursor_[depth] == limit) {
      if (depth == 0) return false;
      --depth;
      ++cursor_[depth];
      continue;
    }
    current_[depth] = candidate(cursor_[depth]);
    if (depth + 1 == length_) return true;
    ++depth;
    cursor_[depth] = 0;
  }
}

std::optional<Word> WordEnumerator::next() {
  if (done_) return std::nullopt;
  bool found;
  if (!started_) {
    started_ = true;
    found = descend(0);
  } else {
    ++cursor_[length_ - 1];
    found = descend(length_ - 1);
  }
  if (!found) {
    done_ = true;
    return std::nullopt;
  }
  return Word{current_};
}

WordEnumerator enumerate_words(SystemPtr system, std::size_t length, const SubAlphabet* restrict_to,
                               std::uint64_t cap) {
  return WordEnumerator(std::move(system), length, restrict_to, cap);
}

std::vector<Symbol> compute_zdelta(const SubAlphabet& sub) {
  std::vector<bool> hit(sub.parent()->size(), false);
  for (Symbol b : sub.members()) {
    for (Symbol a : sub.parent()->successors(b)) hit[a] = true;
  }
  std::vector<Symbol> out;
  for (Symbol a = 0; a < hit.size(); ++a) {
    if (hit[a]) out.push_back(a);
  }
  return out;
}

}  // namespace hitlaw
