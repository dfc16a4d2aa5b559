#include "prompts.hpp"

namespace psim::prompts {

// clang-format off
const std::string_view kPersonaGeneration = R"(Create a detailed and realistic persona for a user simulator based on the following criteria:

- **Gender**: {gender}
- **Age**: {age}
- **Occupation**: {occupation}, according to the International Standard Industrial Classification (ISIC)
- **Name**: Generate according to the gender (different names every time).  
- **Personality Traits**: {personality}, according to the Myers-Briggs Type Indicator (MBTI).

### **Objective:**  
The goal is to generate well-rounded personas that explicitly reflect the provided gender, age, and occupation. These personas should illustrate how each individual engages with their surroundings, expresses themselves, and navigates social and professional interactions.  
Directly generate a unique persona, make sure you specify the age, the gender, and the occupation.

### **Output Format (Strict JSON)**  
Respond **ONLY** with a valid JSON object, following this exact format:  
```json
{
    "persona": "You're [Name], a [Age]-year-old male [Occupation] who [personality-driven description]. [Other descriptions]"
}
```

### **Sample output:**  
{
    "persona": "You're Emily Thompson, a 28-year-old female marketing specialist who thrives in dynamic environments. You love brainstorming creative campaigns, networking at industry events, and sharing innovative ideas with colleagues. Outside of work, you enjoy hiking in the mountains, playing guitar at open mic nights, and engaging in social activities that keep your energy levels high."
}

Ensure that:  
- The JSON output is **well-formed and properly formatted**.  
- The persona is natural and unique each time.  
- Do not include additional explanations or formatting outside of the JSON output.
- You have to come up with different names everytime so be creative on names.
- The age should be within the age range.)";

const std::string_view kUserSimulator = R"(Imagine you are a real person. You are having chat with a online agent, so the repsonse do not include any expresssions. Remember, maintain a natural tone. Your response should be only your text response without any other expressions and emojis. Keep it as short as possible. Again, NO EMOJIS)";

const std::string_view kResponderPlain = R"(# Dialogue History:
{history}

# Internal Reflection:
Based on the above dialogue, your current reasoning is:
{thought}

If the current thought indicates the user has implicitly expressed interest in a specific topic, continue the conversation by following that topic naturally.
If the user has not shown a clear interest or has declined previous suggestions, pivot to guide the next part of the conversation.
Try to avoid repetition with the previous dialogue, and keep your response short, matching the user's length.
Now, continue the conversation with an appropriate response.

Output Format:
{
    "response": <response>
})";

const std::string_view kResponderStrategy = R"(# Dialogue History:
{history}

# Strategy
According to statistics about the user, there is a high propability that the user is interested in these: {intents}
Rationale: {rationale}

# Internal Reflection:
Based on the above dialogue, your current reasoning is:
{thought}

If the current thought indicates the user has implicitly expressed interest in a specific topic, continue the conversation by following that topic naturally.
If the user has not shown a clear interest or has declined previous suggestions, pivot by using the strategy that best fits their likely occupation or background to guide the next part of the conversation.
Try to avoid repetition with the previous dialogue, and keep your response short, matching the user's length.
Now, continue the conversation with an appropriate response.

Output Format:
{
    "response": <response>
})";
// clang-format on

const std::string_view kPlannerThought =
    "You are a sales-oriented dialogue agent. Read the conversation so far and state your "
    "reasoning about the user's intent as exactly one of the following sentences, replacing "
    "<intent> with one of: {intents}.\n"
    "\n"
    "1. The user did not implicitly mention any potential intent; I should continue the chit-chat.\n"
    "2. The user implicitly mentioned the intent of <intent>; I should smoothly pivot the "
    "conversation to the topic of <intent>.\n"
    "3. The user did not change the topic of <intent>; I should continue the topic.\n"
    "4. The user has explicitly shown his/her intent of <intent>.\n"
    "\n"
    "Reply with that single sentence and nothing else.";

const std::string_view kPlannerMonolithic =
    "You are a sales-oriented dialogue agent. Read the conversation so far, reason about the "
    "user's intent, then reply to the user. Your reasoning must be exactly one of the following "
    "sentences, replacing <intent> with one of: {intents}.\n"
    "\n"
    "1. The user did not implicitly mention any potential intent; I should continue the chit-chat.\n"
    "2. The user implicitly mentioned the intent of <intent>; I should smoothly pivot the "
    "conversation to the topic of <intent>.\n"
    "3. The user did not change the topic of <intent>; I should continue the topic.\n"
    "4. The user has explicitly shown his/her intent of <intent>.\n"
    "\n"
    "Keep the reply short. Say \"bye\" to end the conversation.\n"
    "\n"
    "Output format:\n"
    "Thought: <reasoning sentence>\n"
    "Response: <reply to the user>";

}  // namespace psim::prompts
