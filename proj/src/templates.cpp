#include "t2iopt/templates.hpp"

#include <charconv>

#include "t2iopt/domain.hpp"

namespace t2iopt {

std::string_view template_name(TemplateId id) {
  switch (id) {
    case TemplateId::Rewrite: return "rewrite";
    case TemplateId::Judge: return "judge";
    case TemplateId::VqaAnswer: return "vqa_answer";
    case TemplateId::Rationalize: return "rationalize";
    case TemplateId::TargetedEdit: return "targeted_edit";
    case TemplateId::ImplicitImprove: return "implicit_improve";
    case TemplateId::Verify: return "verify";
    case TemplateId::DvqDecompose: return "dvq_decompose";
    case TemplateId::DvqRefine: return "dvq_refine";
  }
  throw TemplateError("unknown template id");
}

std::string_view template_source(TemplateId id) {
  const auto name = template_name(id);
  for (const auto& [n, body] : detail::embedded_templates()) {
    if (n == name) return body;
  }
  throw TemplateError("template asset not embedded: " + std::string(name));
}

std::string image_placeholder(int index) { return "<image_" + std::to_string(index) + ">"; }

namespace {

struct LoopFrame {
  std::string var;
  std::size_t index;
};

class Renderer {
 public:
  Renderer(std::string_view src, const TemplateArgs& args) : src_(src), args_(args) {}

  std::string run() {
    std::string out;
    std::size_t pos = render_block(0, nullptr, out, false);
    if (pos != src_.size()) throw TemplateError("unexpected {% endfor %}");
    return out;
  }

 private:
  // Renders from `pos` until end of input or a matching endfor. Returns the
  // position just after the endfor tag (or src size).
  std::size_t render_block(std::size_t pos, const LoopFrame* frame, std::string& out, bool in_loop) {
    while (pos < src_.size()) {
      const std::size_t expr = src_.find("{{", pos);
      const std::size_t stmt = src_.find("{%", pos);
      const std::size_t next = std::min(expr, stmt);
      if (next == std::string_view::npos) {
        if (in_loop) throw TemplateError("missing {% endfor %}");
        out.append(src_.substr(pos));
        return src_.size();
      }
      out.append(src_.substr(pos, next - pos));
      if (next == expr) {
        const std::size_t close = src_.find("}}", next + 2);
        if (close == std::string_view::npos) throw TemplateError("unterminated {{");
        if (!skipping_) out += evaluate(trim(src_.substr(next + 2, close - next - 2)), frame);
        pos = close + 2;
        continue;
      }
      const std::size_t close = src_.find("%}", next + 2);
      if (close == std::string_view::npos) throw TemplateError("unterminated {%");
      const std::string tag = trim(src_.substr(next + 2, close - next - 2));
      std::size_t after = close + 2;
      if (after < src_.size() && src_[after] == '\n') ++after;
      if (tag == "endfor") {
        if (!in_loop) throw TemplateError("endfor without for");
        return after;
      }
      pos = render_loop(tag, after, out);
    }
    if (in_loop) throw TemplateError("missing {% endfor %}");
    return pos;
  }

  std::size_t render_loop(const std::string& tag, std::size_t body_start, std::string& out) {
    // for <var> in range(<count>)
    constexpr std::string_view kFor = "for ";
    constexpr std::string_view kIn = " in range(";
    if (tag.rfind(kFor, 0) != 0) throw TemplateError("unsupported tag: " + tag);
    const std::size_t in = tag.find(kIn);
    if (in == std::string::npos || tag.back() != ')') throw TemplateError("unsupported loop: " + tag);
    LoopFrame frame{trim(tag.substr(kFor.size(), in - kFor.size())), 0};
    const std::string count_name = trim(tag.substr(in + kIn.size(), tag.size() - in - kIn.size() - 1));
    const std::size_t count = skipping_ ? 0 : parse_count(scalar(count_name));
    std::size_t end = std::string_view::npos;
    if (count == 0) {
      // Walk the body for structure only; nothing inside is evaluated.
      const bool outer = skipping_;
      skipping_ = true;
      std::string sink;
      end = render_block(body_start, &frame, sink, true);
      skipping_ = outer;
      return end;
    }
    for (std::size_t i = 0; i < count; ++i) {
      frame.index = i;
      end = render_block(body_start, &frame, out, true);
    }
    return end;
  }

  std::string evaluate(const std::string& expr, const LoopFrame* frame) const {
    if (frame) {
      if (expr == frame->var) return std::to_string(frame->index);
      if (expr == frame->var + " + 1") return std::to_string(frame->index + 1);
      const std::string suffix = "[" + frame->var + "]";
      if (expr.size() > suffix.size() && expr.compare(expr.size() - suffix.size(), suffix.size(), suffix) == 0) {
        const std::string name = expr.substr(0, expr.size() - suffix.size());
        auto it = args_.lists.find(name);
        if (it == args_.lists.end()) throw TemplateError("unknown list: " + name);
        if (frame->index >= it->second.size()) throw TemplateError("list too short: " + name);
        return it->second[frame->index];
      }
    }
    return scalar(expr);
  }

  const std::string& scalar(const std::string& name) const {
    auto it = args_.scalars.find(name);
    if (it == args_.scalars.end()) throw TemplateError("unknown template variable: " + name);
    return it->second;
  }

  static std::size_t parse_count(const std::string& text) {
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw TemplateError("loop count is not a number: " + text);
    return value;
  }

  std::string_view src_;
  const TemplateArgs& args_;
  bool skipping_ = false;
};

}  // namespace

std::string render_template(std::string_view source, const TemplateArgs& args) {
  return Renderer(source, args).run();
}

std::string render(TemplateId id, const TemplateArgs& args) { return render_template(template_source(id), args); }

}  // namespace t2iopt
