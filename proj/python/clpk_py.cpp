#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "clpk/engine.hpp"
#include "clpk/ic.hpp"

namespace py = pybind11;
using namespace clpk;

namespace {

using Bindings = std::map<std::string, std::string>;

// Owns an engine and collects its output so Python sees it as a string.
class PyEngine {
public:
    PyEngine() {
        e_.out = &out_;
        e_.warn = [this](const std::string &w) { warnings_.push_back(w); };
    }

    void consult(const std::string &path) { guarded([&] { e_.consult_file(path); }); }
    void load(const std::string &text) { guarded([&] { e_.load_string(text); }); }

    // Up to `limit` answers (0 means all), each a map from variable name to text.
    std::vector<Bindings> solutions(const std::string &goal, std::size_t limit) {
        std::vector<Bindings> out;
        guarded([&] {
            ReadResult rr = e_.read_term(goal);
            Term g = e_.expand_goal(rr.term, e_.user(), rr.term);
            Query q(e_, g, e_.user(), rr.var_names);
            while ((limit == 0 || out.size() < limit) && q.next()) {
                Bindings b;
                for (const auto &[name, v] : rr.var_names)
                    if (name[0] != '_')
                        b[name] = e_.format(v);
                out.push_back(std::move(b));
            }
        });
        return out;
    }

    std::optional<Bindings> once(const std::string &goal) {
        auto s = solutions(goal, 1);
        if (s.empty())
            return std::nullopt;
        return s.front();
    }

    std::size_t count(const std::string &goal) {
        std::size_t n = 0;
        guarded([&] {
            ReadResult rr = e_.read_term(goal);
            n = e_.count_solutions(e_.expand_goal(rr.term, e_.user(), rr.term), e_.user());
        });
        return n;
    }

    std::string take_output() {
        std::string s = out_.str();
        out_.str("");
        return s;
    }

    std::vector<std::string> warnings() const { return warnings_; }

private:
    template <class F> void guarded(F &&f) {
        try {
            f();
        } catch (const PrologError &ex) {
            throw py::value_error(format_error(e_, ex));
        }
    }

    Engine e_;
    std::ostringstream out_;
    std::vector<std::string> warnings_;
};

} // namespace

PYBIND11_MODULE(_clpk, m) {
    m.doc() = "Constraint logic programming engine";
    // Errors raised by goals surface as ValueError; this alias documents that.
    m.attr("PrologError") = py::handle(PyExc_ValueError);
    py::class_<PyEngine>(m, "Engine")
        .def(py::init<>())
        .def("consult", &PyEngine::consult, py::arg("path"))
        .def("load", &PyEngine::load, py::arg("text"))
        .def("solutions", &PyEngine::solutions, py::arg("goal"), py::arg("limit") = 0)
        .def("once", &PyEngine::once, py::arg("goal"))
        .def("count", &PyEngine::count, py::arg("goal"))
        .def("take_output", &PyEngine::take_output)
        .def_property_readonly("warnings", &PyEngine::warnings);
}
