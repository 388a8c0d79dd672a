#include "clpk/reader.hpp"

#include <cctype>
#include <cmath>
#include <limits>

namespace clpk {

std::string SourcePos::str() const {
    std::string s = file.empty() ? std::string("<input>") : file;
    return s + ":" + std::to_string(line) + ":" + std::to_string(column);
}

SyntaxError::SyntaxError(const std::string &what, SourcePos pos)
    : PrologError(error_term(mk_struct("syntax_error", {Term::atom(what)}),
                             Term::string(pos.str())),
                  pos.str() + ": syntax error: " + what),
      pos_(std::move(pos)) {}

namespace {

bool is_symbol_char(char c) {
    switch (c) {
    case '+': case '-': case '*': case '/': case '\\': case '^': case '<': case '>':
    case '=': case '~': case ':': case '.': case '?': case '@': case '#': case '&': case '$':
        return true;
    default:
        return false;
    }
}

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
public:
    Lexer(std::string_view text, const std::string &file) : s_(text) { pos_.file = file; }

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            bool layout = skip_layout();
            Token t;
            t.pos = pos_;
            t.layout_before = layout || out.empty();
            if (at_end()) {
                t.kind = TokKind::Eof;
                out.push_back(std::move(t));
                return out;
            }
            lex_one(t);
            out.push_back(std::move(t));
        }
    }

private:
    bool at_end(std::size_t k = 0) const { return i_ + k >= s_.size(); }
    char ch(std::size_t k = 0) const { return at_end(k) ? '\0' : s_[i_ + k]; }

    void advance() {
        if (s_[i_] == '\n') {
            ++pos_.line;
            pos_.column = 1;
        } else {
            ++pos_.column;
        }
        ++i_;
    }

    [[noreturn]] void fail(const std::string &what, const SourcePos &p) const { throw SyntaxError(what, p); }

    bool skip_layout() {
        bool any = false;
        while (!at_end()) {
            char c = ch();
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
                any = true;
            } else if (c == '%') {
                while (!at_end() && ch() != '\n')
                    advance();
                any = true;
            } else if (c == '/' && ch(1) == '*') {
                SourcePos start = pos_;
                advance();
                advance();
                while (!(ch() == '*' && ch(1) == '/')) {
                    if (at_end())
                        fail("unterminated block comment", start);
                    advance();
                }
                advance();
                advance();
                any = true;
            } else {
                break;
            }
        }
        return any;
    }

    void lex_one(Token &t) {
        char c = ch();
        if (is_digit(c)) {
            t.kind = TokKind::Number;
            t.text = number();
        } else if (c == '_' || std::isupper(static_cast<unsigned char>(c))) {
            t.kind = TokKind::Var;
            while (!at_end() && is_alnum(ch())) {
                t.text += ch();
                advance();
            }
        } else if (std::isalpha(static_cast<unsigned char>(c))) {
            t.kind = TokKind::Name;
            while (!at_end() && is_alnum(ch())) {
                t.text += ch();
                advance();
            }
        } else if (c == '\'') {
            t.kind = TokKind::Name;
            t.text = quoted('\'');
        } else if (c == '"') {
            t.kind = TokKind::String;
            t.text = quoted('"');
        } else if (c == '`') {
            t.kind = TokKind::BackQuote;
            t.text = quoted('`');
        } else if (c == '(' || c == ')' || c == '[' || c == ']' || c == '{' || c == '}' || c == ',' ||
                   c == '|') {
            t.kind = TokKind::Punct;
            t.text = std::string(1, c);
            advance();
            if (c == '|' && ch() == '|') {
                t.kind = TokKind::Name;
                t.text = "||";
                advance();
            }
        } else if (c == '!' || c == ';') {
            t.kind = TokKind::Name;
            t.text = std::string(1, c);
            advance();
        } else if (is_symbol_char(c)) {
            if (c == '.' && (at_end(1) || std::isspace(static_cast<unsigned char>(ch(1))) || ch(1) == '%')) {
                t.kind = TokKind::End;
                t.text = ".";
                advance();
                return;
            }
            t.kind = TokKind::Name;
            while (!at_end() && is_symbol_char(ch())) {
                t.text += ch();
                advance();
            }
        } else {
            fail(std::string("unexpected character '") + c + "'", pos_);
        }
    }

    std::string digits(int base) {
        std::string d;
        for (;;) {
            char c = ch();
            int v = is_digit(c) ? c - '0'
                  : (c >= 'a' && c <= 'z') ? c - 'a' + 10
                  : (c >= 'A' && c <= 'Z') ? c - 'A' + 10
                                            : 99;
            if (at_end() || v >= base)
                break;
            d += c;
            advance();
        }
        return d;
    }

    std::string number() {
        SourcePos start = pos_;
        if (ch() == '0' && ch(1) == '\'') {
            advance();
            advance();
            if (at_end())
                fail("unterminated character code", start);
            int code;
            if (ch() == '\\') {
                code = escape(start);
            } else if (ch() == '\'' && ch(1) == '\'') {
                advance();
                advance();
                code = '\'';
            } else {
                code = static_cast<unsigned char>(ch());
                advance();
            }
            return std::to_string(code);
        }
        if (ch() == '0' && (ch(1) == 'x' || ch(1) == 'o' || ch(1) == 'b')) {
            int base = ch(1) == 'x' ? 16 : ch(1) == 'o' ? 8 : 2;
            std::size_t save_i = i_;
            SourcePos save_p = pos_;
            advance();
            advance();
            std::string d = digits(base);
            if (!d.empty()) {
                Integer v = 0;
                for (char c : d) {
                    int x = is_digit(c) ? c - '0' : (std::tolower(c) - 'a' + 10);
                    v = v * base + x;
                }
                return v.str();
            }
            i_ = save_i;
            pos_ = save_p;
        }
        std::string text = digits(10);
        if (ch() == '_' && is_digit(ch(1))) {
            advance();
            text += '_';
            text += digits(10);
            return text;
        }
        text += fraction();
        if (ch() == '_' && ch(1) == '_' && (is_digit(ch(2)) || (ch(2) == '-' && is_digit(ch(3))))) {
            advance();
            advance();
            text += "__";
            if (ch() == '-') {
                text += '-';
                advance();
            }
            text += digits(10);
            text += fraction();
        }
        return text;
    }

    // Optional ".ddd[e[+-]ddd]" or "Inf"/"NaN" suffix of a float.
    std::string fraction() {
        std::string f;
        if (!(ch() == '.' && is_digit(ch(1))))
            return f;
        advance();
        f += '.';
        f += digits(10);
        if ((ch() == 'e' || ch() == 'E') &&
            (is_digit(ch(1)) || ((ch(1) == '+' || ch(1) == '-') && is_digit(ch(2))))) {
            f += 'e';
            advance();
            if (ch() == '+' || ch() == '-') {
                f += ch();
                advance();
            }
            f += digits(10);
        } else if (s_.substr(i_, 3) == "Inf" || s_.substr(i_, 3) == "NaN") {
            f += s_.substr(i_, 3);
            advance();
            advance();
            advance();
        }
        return f;
    }

    int escape(const SourcePos &start) {
        advance(); // backslash
        if (at_end())
            fail("unterminated escape", start);
        char c = ch();
        advance();
        switch (c) {
        case 'n': return '\n';
        case 't': return '\t';
        case 'r': return '\r';
        case 'a': return '\a';
        case 'b': return '\b';
        case 'f': return '\f';
        case 'v': return '\v';
        case 'e': return 27;
        case '0': case '1': case '2': case '3': case '4': case '5': case '6': case '7': {
            int v = c - '0';
            while (ch() >= '0' && ch() <= '7') {
                v = v * 8 + (ch() - '0');
                advance();
            }
            if (ch() == '\\')
                advance();
            return v;
        }
        case 'x': {
            int v = 0;
            while (std::isxdigit(static_cast<unsigned char>(ch()))) {
                char d = ch();
                v = v * 16 + (is_digit(d) ? d - '0' : std::tolower(d) - 'a' + 10);
                advance();
            }
            if (ch() == '\\')
                advance();
            return v;
        }
        case '\n': return -1; // continuation
        default: return static_cast<unsigned char>(c);
        }
    }

    std::string quoted(char q) {
        SourcePos start = pos_;
        advance();
        std::string out;
        for (;;) {
            if (at_end())
                fail("unterminated quoted item", start);
            char c = ch();
            if (c == q) {
                if (ch(1) == q) {
                    out += q;
                    advance();
                    advance();
                    continue;
                }
                advance();
                return out;
            }
            if (c == '\\') {
                int e = escape(start);
                if (e >= 0)
                    out += static_cast<char>(e);
                continue;
            }
            out += c;
            advance();
        }
    }

    std::string_view s_;
    std::size_t i_ = 0;
    SourcePos pos_;
};

// Exact value of a decimal literal like "1.01e-3"; nullopt for infinities.
// Boost reads a leading 0 as an octal prefix.
Integer decimal_integer(const std::string &digits) {
    std::size_t nz = digits.find_first_not_of('0');
    return Integer(nz == std::string::npos ? std::string("0") : digits.substr(nz));
}

std::optional<Rational> decimal_value(const std::string &text) {
    if (text.find("Inf") != std::string::npos || text.find("NaN") != std::string::npos)
        return std::nullopt;
    bool neg = !text.empty() && text[0] == '-';
    std::string s = neg ? text.substr(1) : text;
    std::size_t e = s.find('e');
    long exp10 = 0;
    if (e != std::string::npos) {
        exp10 = std::stol(s.substr(e + 1));
        s = s.substr(0, e);
    }
    std::size_t dot = s.find('.');
    if (dot != std::string::npos) {
        exp10 -= static_cast<long>(s.size() - dot - 1);
        s.erase(dot, 1);
    }
    Integer mant = decimal_integer(s);
    Integer scale = boost::multiprecision::pow(Integer(10), static_cast<unsigned>(std::labs(exp10)));
    Rational q = exp10 >= 0 ? Rational(mant * scale) : Rational(mant, scale);
    return neg ? Rational(-q) : q;
}

double float_value(const std::string &text) {
    bool neg = !text.empty() && text[0] == '-';
    if (text.find("Inf") != std::string::npos)
        return neg ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    if (text.find("NaN") != std::string::npos)
        return std::numeric_limits<double>::quiet_NaN();
    return std::strtod(text.c_str(), nullptr);
}

} // namespace

std::vector<Token> tokenize(std::string_view text, const std::string &file) { return Lexer(text, file).run(); }

Term number_from_literal(const std::string &text, bool negative) {
    std::string sign = negative ? "-" : "";
    std::size_t bb = text.find("__");
    if (bb != std::string::npos) {
        // "-L__H" negates the lower bound only; the upper carries its own sign.
        std::string lo = sign + text.substr(0, bb);
        std::string hi = text.substr(bb + 2);
        auto bound = [](const std::string &s, bool up) {
            if (auto q = decimal_value(s))
                return up ? to_double_up(*q) : to_double_down(*q);
            return float_value(s);
        };
        double l = bound(lo, false), h = bound(hi, true);
        if (!(l <= h))
            throw PrologError(error_term(mk_struct("syntax_error", {Term::atom("bad bounded real")})),
                              "bounded real with lower bound above upper bound: " + lo + "__" + hi);
        return Term::breal(l, h);
    }
    std::size_t us = text.find('_');
    if (us != std::string::npos) {
        Integer num = decimal_integer(text.substr(0, us)), den = decimal_integer(text.substr(us + 1));
        if (den == 0)
            throw_evaluation_error("zero_divisor");
        return Term::rational(negative ? Integer(-num) : num, den);
    }
    if (text.find('.') != std::string::npos)
        return Term::floating(float_value(sign + text));
    Integer v = decimal_integer(text);
    return Term::integer(negative ? Integer(-v) : v);
}

} // namespace clpk
