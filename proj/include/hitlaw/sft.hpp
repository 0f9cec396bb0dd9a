#pragma once

// One-sided subshifts of finite type: alphabets, 0-1 transition structures,
// sub-alphabets, allowed words and higher-block recoding.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hitlaw/linalg.hpp"
#include "hitlaw/types.hpp"

namespace hitlaw {

class Alphabet {
 public:
  /// Labels must be nonempty and unique.
  explicit Alphabet(std::vector<std::string> labels);
  /// Labels "1", "2", ..., "size".
  static Alphabet numbered(std::size_t size);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(Symbol s) const { return labels_.at(s); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::optional<Symbol> find(std::string_view label) const noexcept;
  /// Throws UnknownSymbol.
  Symbol symbol(std::string_view label) const;

  bool operator==(const Alphabet&) const = default;

 private:
  std::vector<std::string> labels_;
};

/// Structural flags of a directed graph given by successor lists.
struct GraphFlags {
  bool irreducible = false;  // strongly connected and has at least one edge
  bool aperiodic = false;    // irreducible with cycle-length gcd 1 (primitive)
  std::size_t period = 0;    // 0 when not irreducible
};

GraphFlags analyze_graph(std::span<const std::vector<Symbol>> successors);

class TransitionSystem {
 public:
  /// successors[a] lists every b with A(a,b)=1; lists are sorted and deduplicated here.
  TransitionSystem(Alphabet alphabet, std::vector<std::vector<Symbol>> successors);

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  std::size_t size() const noexcept { return alphabet_.size(); }
  std::size_t transitions() const noexcept { return adjacency_.nonzeros(); }

  bool allowed(Symbol a, Symbol b) const noexcept;
  std::span<const std::uint32_t> successors(Symbol a) const noexcept { return adjacency_.row_indices(a); }
  std::span<const std::uint32_t> predecessors(Symbol b) const noexcept { return reverse_.row_indices(b); }
  /// Position of (a,b) in the CSR edge order, the indexing used by per-edge arrays.
  std::optional<std::size_t> edge_index(Symbol a, Symbol b) const noexcept;

  /// 0-1 matrix in CSR form; values are 1.0.
  const CsrMatrix& adjacency() const noexcept { return adjacency_; }

  bool irreducible() const noexcept { return flags_.irreducible; }
  bool aperiodic() const noexcept { return flags_.aperiodic; }
  bool primitive() const noexcept { return flags_.irreducible && flags_.aperiodic; }
  std::size_t period() const noexcept { return flags_.period; }

  std::vector<std::vector<int>> dense() const;

 private:
  Alphabet alphabet_;
  CsrMatrix adjacency_;
  CsrMatrix reverse_;
  GraphFlags flags_;
};

using SystemPtr = std::shared_ptr<const TransitionSystem>;

/// Square 0-1 matrix; labels default to "1".."l". Throws NotSquare,
/// ZeroRowOrColumn, InvalidArgument (entries outside {0,1}).
SystemPtr build_system(const std::vector<std::vector<int>>& matrix,
                       std::optional<Alphabet> labels = std::nullopt);

class SubAlphabet {
 public:
  const SystemPtr& parent() const noexcept { return parent_; }
  /// Members in increasing symbol order.
  const std::vector<Symbol>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool contains(Symbol s) const noexcept { return s < local_.size() && local_[s] != npos; }
  /// Position of s among members(), or npos.
  std::size_t local_index(Symbol s) const noexcept { return s < local_.size() ? local_[s] : npos; }

  bool restricted_irreducible() const noexcept { return flags_.irreducible; }
  bool restricted_aperiodic() const noexcept { return flags_.aperiodic; }
  bool mixing() const noexcept { return flags_.irreducible && flags_.aperiodic; }

  /// Table for kernels::membership_mask: -1 on members, 0 elsewhere.
  const std::vector<std::int32_t>& membership_table() const noexcept { return table_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  friend SubAlphabet build_subalphabet(SystemPtr, std::span<const Symbol>);
  SystemPtr parent_;
  std::vector<Symbol> members_;
  std::vector<std::size_t> local_;
  std::vector<std::int32_t> table_;
  GraphFlags flags_;
};

/// Throws NotProperSubset for empty or full member sets, UnknownSymbol for out-of-range symbols.
SubAlphabet build_subalphabet(SystemPtr system, std::span<const Symbol> members);
SubAlphabet build_subalphabet(SystemPtr system, const std::vector<std::string>& labels);

/// The restricted matrix A_Delta as its own system, labelled by the parent labels.
/// Requires sub.mixing() (every row and column of A_Delta nonzero).
SystemPtr restricted_system(const SubAlphabet& sub);

struct Word {
  std::vector<Symbol> symbols;

  std::size_t size() const noexcept { return symbols.size(); }
  bool empty() const noexcept { return symbols.empty(); }
  bool operator==(const Word&) const = default;
  auto operator<=>(const Word&) const = default;
};

bool is_allowed(const TransitionSystem& system, const Word& word) noexcept;
/// Throws DisallowedWord.
void require_allowed(const TransitionSystem& system, const Word& word);
Word parse_word(const TransitionSystem& system, const std::vector<std::string>& labels);
std::string format_word(const TransitionSystem& system, const Word& word);

struct RecodingMap {
  std::size_t block_length = 2;
  /// projection[s] = the original (k-1)-block encoded by new symbol s.
  std::vector<std::vector<Symbol>> projection;
};

/// New system on allowed (k-1)-blocks; (u,v) allowed iff they overlap in k-2 symbols.
std::pair<SystemPtr, RecodingMap> recode_higher_block(const TransitionSystem& system,
                                                      std::size_t block_length);

/// Number of allowed words of length n (optionally inside Delta) from matrix
/// powers: sum of entries of A^{n-1}. Saturates at UINT64_MAX.
std::uint64_t count_words(const TransitionSystem& system, std::size_t length,
                          const SubAlphabet* restrict_to = nullptr);

/// Lexicographic streaming enumeration of allowed words of a fixed length.
class WordEnumerator {
 public:
  static constexpr std::uint64_t default_cap = 10'000'000;

  /// Throws InvalidArgument (length 0) and LengthOverflow when the count exceeds cap.
  WordEnumerator(SystemPtr system, std::size_t length, const SubAlphabet* restrict_to = nullptr,
                 std::uint64_t cap = default_cap);

  /// Next word in lexicographic order, or nullopt when exhausted.
  std::optional<Word> next();
  std::uint64_t count() const noexcept { return count_; }

 private:
  bool admissible(Symbol s) const noexcept;
  bool descend(std::size_t depth);

  SystemPtr system_;
  std::size_t length_;
  std::vector<std::int8_t> allowed_;  // symbol filter
  std::uint64_t count_;
  std::vector<Symbol> current_;
  std::vector<std::size_t> cursor_;  // position within the candidate list at each depth
  bool started_ = false;
  bool done_ = false;
};

WordEnumerator enumerate_words(SystemPtr system, std::size_t length,
                               const SubAlphabet* restrict_to = nullptr,
                               std::uint64_t cap = WordEnumerator::default_cap);

/// Z_Delta: symbols reachable in one step from Delta, sorted.
std::vector<Symbol> compute_zdelta(const SubAlphabet& sub);

}  // namespace hitlaw
