#ifndef PSK_PARSE_HPP
#define PSK_PARSE_HPP

#include "psk/logic.hpp"

#include <string>
#include <string_view>
#include <vector>

// Concrete syntax shared by formulas, sketch files, lemma libraries and
// proof-object parameters.
//
//   quantifiers  forall x:S. body   exists x:S. body   (body extends right)
//   connectives  ~  /\  \/  ->      precedence ~ > /\ > \/ > ->, right assoc
//   atoms        P(t,...)  P  t1 = t2  t1 <= t2  t1 < t2  t1 >= t2  t1 > t2
//   terms        x  c  f(t,...)  integer literals  + - *  parentheses
//   constants    true  false
//   comments     // to end of line

namespace psk {

struct ParseError : std::runtime_error {
    int line;
    int col;
    ParseError(std::string msg, int line_, int col_)
        : std::runtime_error(std::move(msg)), line(line_), col(col_) {}
};

enum class TokKind { Ident, Keyword, Int, Symbol, End };

struct Token {
    TokKind kind = TokKind::End;
    std::string text;
    std::int64_t value = 0;
    int line = 1;
    int col = 1;
};

// Tokenizes the whole input. Throws ParseError on bad characters.
std::vector<Token> lex(std::string_view src);

bool is_keyword(const std::string& word);

// Stream over a token vector with single-token rewind support.
class TokenStream {
public:
    explicit TokenStream(std::vector<Token> toks) : toks_(std::move(toks)) {}

    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool at_end() const { return peek().kind == TokKind::End; }

    size_t mark() const { return pos_; }
    void rewind(size_t m) { pos_ = m; }

    bool accept_symbol(std::string_view s);
    bool accept_keyword(std::string_view s);
    Token expect_symbol(std::string_view s);
    Token expect_keyword(std::string_view s);
    Token expect_ident();
    [[noreturn]] void fail(const std::string& msg) const;

private:
    std::vector<Token> toks_;
    size_t pos_ = 0;
};

// Free-variable policy when parsing formulas and terms.
//   Closed: free variables are errors.
//   Open:   free variables are allowed; sorts are inferred from use and may
//           be pre-seeded (eigenvariables with known sorts).
struct FreeVarScope {
    bool allow_free = false;
    std::map<std::string, std::string> known; // name -> sort (in+out)
};

Formula parse_formula(TokenStream& ts, const Signature& sig, FreeVarScope& scope);
Term parse_term(TokenStream& ts, const Signature& sig, FreeVarScope& scope);

// Convenience wrappers over a fresh token stream; the whole input must be
// consumed.
Formula parse_formula_text(std::string_view text, const Signature& sig,
                           FreeVarScope scope = {});
Term parse_term_text(std::string_view text, const Signature& sig, FreeVarScope scope = {});

// Deterministic minimal-parenthesis rendering; parse(render(x)) yields a
// structurally equal value.
std::string render(const Term& t);
std::string render(const Formula& f);
std::string render(const Position& p);

// Signature declarations rendered as `sort S; fun f : S -> S; ...` lines (the
// DSL's signature block body). Parses back with parse_signature_body.
std::string render_signature_body(const Signature& sig);
Signature parse_signature_body(TokenStream& ts); // stops at '}' or end

} // namespace psk

#endif
