use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{format_scenario, DatagenError, GenSpec, LabeledQuestion, Scenario};

/// HR use cases that generation draws a domain from.
pub const HR_DOMAINS: &[&str] = &[
    "request leaves",
    "inquire about benefits",
    "retrieve payroll details",
    "apply for internal jobs",
    "navigate the onboarding process",
    "schedule performance reviews",
    "request training",
    "report workplace issues",
    "access policies",
    "participate in surveys",
    "engage with HR initiatives",
    "benefit enrollment",
    "goal setting",
    "safety guidelines",
    "compliance training",
];

const PREAMBLE: &str = "You are asked to come up with a set of {count} diverse scenarios. The input is a user response and a list of questions that the user response could answer about the user. The instruction is to select the right set of questions that could be answered by user input and give an answer for each selected question.";

/// The numbered requirement list; `{schema}`, `{number1}` and `{number2}` are filled per call.
pub const REQUIREMENTS: [&str; 19] = [
    "Try not to repeat the verb or cases for each input to maximize diversity.",
    "The language used for the user response should be diverse.",
    "The type of input should be diverse. The user response should include diverse types of tasks like {schema}.",
    "You should generate an appropriate List of Questions for the input. It should involve realistic data and should not contain simple placeholders.",
    "The list of questions should start with a choice name such as a, b, c, ...",
    "Output1 should be the choice that could be answered by the user response.",
    "Output1 should be all correct choice names such as a, b, c.",
    "The list of questions should contain {number1} questions.",
    "Output1 contains {number2} choices.",
    "Every question has an equal chance to be the correct answer. The answer should not always contain 'a'.",
    "Output2 should be the correct answer for each question.",
    "The answer from Output2 is extracted from the User Response.",
    "The answer of Output2 cannot be 'yes' or 'no'.",
    "The scenario is to help corporate extract information from their employees.",
    "Try not to ask similar questions to maximize diversity.",
    "Output2 does not contain choice symbols like a, b, c.",
    "The answer from Output2 can only be extracted from the User Response.",
    "Output2 uses a comma to separate the answers.",
    "Two empty lines between each case.",
];

/// A worked example placed in the prompt.
#[derive(Debug, Clone, Copy)]
pub struct FewShot {
    pub utterance: &'static str,
    pub questions: &'static [&'static str],
    pub output1: &'static [char],
    pub output2: &'static [&'static str],
}

impl FewShot {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            utterance: self.utterance.to_string(),
            questions: self
                .questions
                .iter()
                .zip('a'..='z')
                .map(|(q, label)| LabeledQuestion {
                    label,
                    text: q.to_string(),
                })
                .collect(),
            output1: self.output1.to_vec(),
            output2: self.output2.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn shape(&self) -> (usize, usize) {
        (self.questions.len(), self.output1.len())
    }
}

pub const FEW_SHOTS: &[FewShot] = &[
    FewShot {
        utterance: "I am taking next Monday off as a vacation day.",
        questions: &[
            "When is the requested time off?",
            "What action does the user want the recipient to take?",
            "What process has the user completed?",
            "What type of time off is being requested?",
        ],
        output1: &['a', 'd'],
        output2: &["next Monday", "vacation day"],
    },
    FewShot {
        utterance: "I would like to schedule a doctor's appointment for next Tuesday at 2pm to get a physical exam.",
        questions: &[
            "What type of appointment does the user want to schedule?",
            "When does the user want to schedule the appointment?",
            "What time does the user want the appointment?",
            "What is the purpose of the appointment?",
            "What action does the user want the recipient to take?",
            "On what date is the user requesting the appointment?",
            "Does the user provide the date for the requested appointment?",
            "Does the user provide the time for the requested appointment?",
        ],
        output1: &['a', 'b', 'c', 'd'],
        output2: &["schedule", "next Tuesday", "2pm", "physical exam"],
    },
    FewShot {
        utterance: "Please enroll me in the dental plan starting January 1st, my employee ID is 48213.",
        questions: &[
            "Which benefit plan does the user want to enroll in?",
            "What is the employee ID of the user?",
            "When should the enrollment start?",
            "Who is the user's manager?",
            "How many dependents does the user have?",
            "What is the user's department?",
        ],
        output1: &['a', 'b', 'c'],
        output2: &["dental plan", "48213", "January 1st"],
    },
];

/// Everything drawn for one prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptDraw {
    pub text: String,
    pub domain: String,
    pub number1: usize,
    pub number2: usize,
    pub example_index: usize,
}

pub fn draw_prompt(spec: &GenSpec, seed: u64) -> Result<PromptDraw, DatagenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domains: Vec<&String> = spec.domains.iter().filter(|d| !d.trim().is_empty()).collect();
    let domain = (*domains.choose(&mut rng).expect("validated non-empty")).clone();
    let (n1_min, n1_max) = spec.number1.bounds();
    let (n2_min, n2_max) = spec.number2.bounds();
    let number1 = rng.random_range(n1_min.max(n2_min)..=n1_max);
    let number2 = rng.random_range(n2_min..=n2_max.min(number1));
    // An example of the requested shape is used when one exists.
    let example_index = FEW_SHOTS
        .iter()
        .position(|f| f.shape() == (number1, number2))
        .unwrap_or_else(|| rng.random_range(0..FEW_SHOTS.len()));

    let mut text = String::from("Human: ");
    text.push_str(&PREAMBLE.replace("{count}", &spec.scenarios_per_call.to_string()));
    text.push_str("\n\nRequirements:\n");
    for (i, req) in REQUIREMENTS.iter().enumerate() {
        let line = req
            .replace("{schema}", &domain)
            .replace("{number1}", &number1.to_string())
            .replace("{number2}", &number2.to_string());
        text.push_str(&format!("{}. {line}\n", i + 1));
    }
    text.push_str("\nExample:\n");
    text.push_str(&format_scenario(&FEW_SHOTS[example_index].scenario()));
    text.push('\n');
    Ok(PromptDraw {
        text,
        domain,
        number1,
        number2,
        example_index,
    })
}

pub fn build_prompt(spec: &GenSpec, seed: u64) -> Result<String, DatagenError> {
    draw_prompt(spec, seed).map(|d| d.text)
}
