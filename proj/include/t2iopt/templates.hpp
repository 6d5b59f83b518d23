#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace t2iopt {

enum class TemplateId {
  Rewrite,
  Judge,
  VqaAnswer,
  Rationalize,
  TargetedEdit,
  ImplicitImprove,
  Verify,
  DvqDecompose,
  DvqRefine,
};

inline constexpr TemplateId kAllTemplates[] = {
    TemplateId::Rewrite,      TemplateId::Judge,           TemplateId::VqaAnswer,
    TemplateId::Rationalize,  TemplateId::TargetedEdit,    TemplateId::ImplicitImprove,
    TemplateId::Verify,       TemplateId::DvqDecompose,    TemplateId::DvqRefine,
};

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Asset file stem, e.g. "targeted_edit".
std::string_view template_name(TemplateId id);

/// Exact bytes of the embedded asset.
std::string_view template_source(TemplateId id);

struct TemplateArgs {
  std::map<std::string, std::string> scalars;
  std::map<std::string, std::vector<std::string>> lists;

  TemplateArgs& set(std::string key, std::string value) {
    scalars[std::move(key)] = std::move(value);
    return *this;
  }
  TemplateArgs& set_list(std::string key, std::vector<std::string> values) {
    lists[std::move(key)] = std::move(values);
    return *this;
  }
};

/// Renders the Jinja subset the assets use:
///   {{ name }}            scalar substitution
///   {{ list[i] }}         element of a list inside a loop
///   {{ i + 1 }}           1-based loop counter
///   {% for i in range(count) %} ... {% endfor %}   count names a scalar
/// A newline directly after a {% %} tag is consumed. Values are inserted
/// verbatim and never re-rendered. Unknown names throw TemplateError.
std::string render_template(std::string_view source, const TemplateArgs& args);

std::string render(TemplateId id, const TemplateArgs& args);

/// Placeholder written into a template's image slot; index is 1-based.
std::string image_placeholder(int index);

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_templates();
}

}  // namespace t2iopt
